#pragma once

#include <string>

#include "config.hpp"
#include "output.hpp"

namespace hardylab::cli {

int cmd_certify_weight(const ExperimentConfig& cfg, Run& run);
int cmd_norm(const ExperimentConfig& cfg, Run& run);
int cmd_maximal(const ExperimentConfig& cfg, Run& run);
int cmd_decompose(const ExperimentConfig& cfg, Run& run);
int cmd_validate_atoms(const ExperimentConfig& cfg, Run& run);
int cmd_reconstruct(const ExperimentConfig& cfg, Run& run);
int cmd_cz_bench(const ExperimentConfig& cfg, Run& run);
int cmd_duality(const ExperimentConfig& cfg, Run& run);
int cmd_sweep(const ExperimentConfig& cfg, Run& run);

}  // namespace hardylab::cli
