/* Copyright 2026 The mdmp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <iosfwd>
#include <string_view>

namespace mdmp::cli {

inline constexpr std::string_view kCsvHeader =
    "benchmark,mode,transport,elements,selected,delay_elems,chunk,iterations,repeat,alpha_s,"
    "beta_s_per_byte,wall_time_s,msgs_per_iter,bytes_per_iter,demotions";

inline constexpr std::string_view kStreamCsvHeader = "config,kernel,repeats,elements,mean_s,ratio,counter_updates";

/// Exit codes: 0 on success, 2 on a configuration error, 1 on a runtime failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mdmp::cli
