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
#ifndef ECAVG_PROTO_SERVER_H_
#define ECAVG_PROTO_SERVER_H_

#include "ecavg/pipeline.h"
#include "ecavg/proto/transport.h"

namespace ecavg::proto {

/// Runs one protocol round as the server.
///
/// Accepts exactly cfg.num_clients connections and serves each on its own
/// thread until that client has registered and uploaded its weights (and its
/// data unless cfg.resident_dataset is set). A REGISTER with an id already
/// taken, or with a backbone other than cfg.expected_backbone, is answered
/// with ERROR and the session keeps waiting for a valid registration. After
/// all uploads arrive the session threads are joined, the global model is
/// assembled and fine-tuned on this thread, and every client receives
/// GLOBAL_UPDATE followed by DONE, in ascending client-id order.
///
/// Any transport failure or protocol violation aborts the whole round: live
/// sessions get ERROR(kAborted), connections are closed and the first error
/// is rethrown. Nothing from a partial round is returned.
ServerReport RunServer(const ServerConfig& cfg, Acceptor& acceptor);

}  // namespace ecavg::proto

#endif  // ECAVG_PROTO_SERVER_H_
