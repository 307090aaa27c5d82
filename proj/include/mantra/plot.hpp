/* Copyright 2026 The Mantra Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Static SVG figures of a contingency plan: road, vehicles at the planning
// frame, predicted TV modes (dashed) and the ego branch for each mode
// (solid, same colour).

#ifndef MANTRA_PLOT_HPP_
#define MANTRA_PLOT_HPP_

#include <string>

#include "mantra/io.hpp"

namespace mantra {

// Input is the record written by the plan stage. Throws DataError on
// missing fields.
std::string render_plan_svg(const io::Json& plan_record);

}  // namespace mantra

#endif  // MANTRA_PLOT_HPP_
