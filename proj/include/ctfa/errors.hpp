// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace ctfa {

enum class ErrorKind {
  contract_violation,
  not_psd,
  non_finite,
  zero_channel,
  unsupported_model,
  infeasible_layout,
  infeasible_linear_path,
  degenerate_geometry,
  infeasible_warm_start,
  config,
  summary,
  io,
};

const char* to_string(ErrorKind kind);

// All library failures surface as ctfa::Error; kind() tells callers which
// recovery path applies (e.g. zero_channel -> uniform covariance).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::contract_violation: return "contract violation";
    case ErrorKind::not_psd: return "not positive semidefinite";
    case ErrorKind::non_finite: return "non-finite value";
    case ErrorKind::zero_channel: return "zero channel";
    case ErrorKind::unsupported_model: return "unsupported model";
    case ErrorKind::infeasible_layout: return "infeasible layout";
    case ErrorKind::infeasible_linear_path: return "infeasible linear path";
    case ErrorKind::degenerate_geometry: return "degenerate geometry";
    case ErrorKind::infeasible_warm_start: return "infeasible warm start";
    case ErrorKind::config: return "config error";
    case ErrorKind::summary: return "summary error";
    case ErrorKind::io: return "i/o error";
  }
  return "error";
}

[[noreturn]] inline void contract_fail(const std::string& what) {
  throw Error(ErrorKind::contract_violation, what);
}

}  // namespace ctfa
