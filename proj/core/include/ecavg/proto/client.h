// Copyright 2026 The ECAvg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef ECAVG_PROTO_CLIENT_H_
#define ECAVG_PROTO_CLIENT_H_

#include <functional>
#include <memory>

#include "ecavg/pipeline.h"
#include "ecavg/proto/transport.h"

namespace ecavg::proto {

using ConnectFn = std::function<std::unique_ptr<Connection>()>;

// Pre-trains, connects, uploads, waits for GLOBAL_UPDATE, then re-trains
// locally. Any out-of-phase message aborts with a protocol error.
ClientReport RunClient(const ClientConfig& cfg, const ConnectFn& connect);

}  // namespace ecavg::proto

#endif  // ECAVG_PROTO_CLIENT_H_
