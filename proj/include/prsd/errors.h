// Copyright (c) 2026 The prsd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRSD_ERRORS_H_
#define PRSD_ERRORS_H_

#include <stdexcept>
#include <string>

namespace prsd {

// Every error raised by the library derives from Error, so callers that only
// care about "did the stage fail" can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PRSD_DEFINE_ERROR(Name)        \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

PRSD_DEFINE_ERROR(DimensionError);      // shape contracts
PRSD_DEFINE_ERROR(ContractError);       // API misuse (e.g. backward on non-scalar)
PRSD_DEFINE_ERROR(ParameterError);      // invalid numeric configuration
PRSD_DEFINE_ERROR(NumericError);        // NaN/Inf where finite values are required
PRSD_DEFINE_ERROR(IngestionError);      // audio files and raw inputs
PRSD_DEFINE_ERROR(NormalizationError);  // speaker-wise normalization
PRSD_DEFINE_ERROR(TooShortError);       // clip too short for the analysis
PRSD_DEFINE_ERROR(TrainingError);
PRSD_DEFINE_ERROR(SamplingError);
PRSD_DEFINE_ERROR(DatasetError);
PRSD_DEFINE_ERROR(FormatError);         // PRSD container / CSV parsing
PRSD_DEFINE_ERROR(ConfigError);
PRSD_DEFINE_ERROR(OrchestrationError);

#undef PRSD_DEFINE_ERROR

}  // namespace prsd

#endif  // PRSD_ERRORS_H_
