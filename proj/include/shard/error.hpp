/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SHARD_ERROR_HPP
#define SHARD_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace shard {

enum class ErrorCode : int {
  kIo = 1,
  kParse,
  kIndex,
  kPredicate,
  kConfig,
  kKeyNull,
  kSchemaMismatch,
  kWireFormat,
  kTransport,
  kDeadlockTimeout,
  kConnect,
  kWorkerPanic,
  kUnsupportedDtype,
  kFinalized,
};

std::string_view ErrorCodeName(ErrorCode code);

/**
 * Every failure raised by the engine. The code identifies the failure class;
 * the message carries location details (row/column, peer rank, ...).
 */
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace shard

#endif  // SHARD_ERROR_HPP
