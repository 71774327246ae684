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

// Runs a cost-aware campaign on a user-defined problem: one continuous input,
// one 3-level categorical input, an expensive noisy HF source and a cheap
// biased LF source.
//
//   ./build/samples/custom_problem [seed] [history.csv]

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>

#include "mfbo/io.hpp"
#include "mfbo/loop.hpp"

int main(int argc, char** argv) {
  using namespace mfbo;
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;

  auto hf = [](const MixedInput& u) {
    const double x = u.continuous[0];
    const double shift[] = {0.0, 0.4, -0.3};
    return (x - 0.6) * (x - 0.6) * 10.0 + shift[u.categorical[0]];
  };
  MFProblem p;
  p.name = "custom";
  p.domain = Domain{{0.0}, {1.0}, {3}};
  p.sources.push_back({"HF", hf, 50.0, 4, 0.01});
  p.sources.push_back({"LF", [hf](const MixedInput& u) { return hf(u) + 0.5 * u.continuous[0] - 0.2; }, 1.0, 12, 0.0});

  LoopConfig cfg;
  cfg.seed = seed;
  cfg.budget = 1500.0;
  cfg.fit.restarts = 6;
  const BOHistory h = run(p, cfg);

  std::cout << "stop: " << to_string(h.stop_reason) << " after " << h.iterations << " iterations\n"
            << "cost: " << h.final_cost() << "  best HF: " << h.final_best() << "\n";
  std::size_t per_source[2] = {0, 0};
  for (const auto& r : h.records) ++per_source[r.source];
  std::cout << "samples HF/LF: " << per_source[0] << "/" << per_source[1] << "\n";
  if (argc > 2) io::write_text(argv[2], io::history_csv(h));
  return h.error.empty() ? 0 : 1;
}
