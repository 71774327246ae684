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

// Fits the emulator to a CSV dataset described by a JSON sidecar and prints
// the estimated noise of each source and its fidelity-manifold position.
//
//   ./build/samples/fit_csv samples/data/bifidelity.csv

#include <iomanip>
#include <iostream>

#include "mfbo/emulator/dataset.hpp"
#include "mfbo/emulator/emulator.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: fit_csv data.csv [sidecar.json]\n";
    return 2;
  }
  try {
    const mfbo::LoadedDataset d = mfbo::load_dataset(argv[1], argc > 2 ? argv[2] : "");
    mfbo::FitConfig cfg;
    cfg.restarts = 8;
    const mfbo::TrainedEmulator m = mfbo::fit(d.data, d.space, cfg);
    const Eigen::VectorXd noise = m.noise_variances();
    std::cout << std::setprecision(4);
    for (std::size_t j = 0; j < d.source_names.size(); ++j) {
      const auto i = static_cast<Eigen::Index>(j);
      std::cout << d.source_names[j] << (j == d.hf_index ? " (HF)" : "") << ": noise var " << noise[i]
                << ", latent (" << m.fidelity_latent()(i, 0) << ", " << m.fidelity_latent()(i, 1) << ")\n";
    }
    for (const auto& w : m.diagnostics().warnings) std::cout << "warning: " << w << "\n";
  } catch (const std::exception& e) {
    std::cerr << "fit_csv: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
