// Copyright 2026 The mfbo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef MFBO_MFBO_HPP
#define MFBO_MFBO_HPP

#include "mfbo/acquisition.hpp"
#include "mfbo/benchmarks.hpp"
#include "mfbo/emulator/dataset.hpp"
#include "mfbo/emulator/emulator.hpp"
#include "mfbo/errors.hpp"
#include "mfbo/io.hpp"
#include "mfbo/loop.hpp"

#endif  // MFBO_MFBO_HPP
