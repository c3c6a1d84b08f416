// Copyright 2026 The manifoldconc authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MANIFOLDCONC_MANIFOLDCONC_HPP
#define MANIFOLDCONC_MANIFOLDCONC_HPP

#include "manifoldconc/bounds.hpp"
#include "manifoldconc/functionals.hpp"
#include "manifoldconc/grassmann.hpp"
#include "manifoldconc/matcalc.hpp"
#include "manifoldconc/matrix_io.hpp"
#include "manifoldconc/montecarlo.hpp"
#include "manifoldconc/rng.hpp"
#include "manifoldconc/smooth_functional.hpp"
#include "manifoldconc/stats.hpp"
#include "manifoldconc/stiefel.hpp"
#include "manifoldconc/tensor.hpp"
#include "manifoldconc/version.hpp"

#endif  // MANIFOLDCONC_MANIFOLDCONC_HPP
