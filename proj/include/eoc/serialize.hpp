// Copyright 2026 The ensemble-oc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EOC_SERIALIZE_HPP_
#define EOC_SERIALIZE_HPP_

#include <ostream>
#include <string>

#include <json.hpp>

#include "eoc/analysis.hpp"
#include "eoc/optimality.hpp"
#include "eoc/optimizer.hpp"
#include "eoc/problem.hpp"

namespace eoc {

using OrderedJson = nlohmann::ordered_json;

OrderedJson to_json(const ValidationReport& r);
OrderedJson to_json(const EstimateReport& r);
OrderedJson to_json(const DualityReport& r);
OrderedJson to_json(const DensityCheckReport& r);
OrderedJson to_json(const McCostReport& r);
OrderedJson to_json(const OptimalityReport& r);
OrderedJson to_json(const NeedleCheck& r);
OrderedJson to_json(const OptimizationTrace& r);

// Control schedules: "t_lo,t_hi,u1..um" per interval; the relaxed variant
// adds "atom,weight" columns, one row per atom.
void write_control_csv(std::ostream& os, const Problem& p, const ControlSignal& u);
void write_control_csv(std::ostream& os, const Problem& p, const RelaxedControl& u);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace eoc

#endif  // EOC_SERIALIZE_HPP_
