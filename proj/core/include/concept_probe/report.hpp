/*
 * Copyright (c) 2026, The concept-probe Authors.
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

#include <string>
#include <vector>

#include "concept_probe/metrics.hpp"

namespace concept_probe {

/// Machine-readable report. Undefined scores serialize as null.
std::string report_to_json(const SuiteReport& report);

/// Concatenates the metric sections of several report documents, keeping the
/// test statistics of the first one.
std::string merge_reports(const std::vector<std::string>& documents);

/// Aligned-column summary: CEM and CLM tables plus CGIM means and histograms.
std::string format_text(const std::string& report_json);

/// One row per scored item (image or concept/class).
std::string format_csv(const std::string& report_json);

}  // namespace concept_probe
