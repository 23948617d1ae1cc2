#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lskt/model.hpp"

namespace lskt {

inline constexpr std::size_t kGradcheckMaxDim = 16;
inline constexpr std::size_t kGradcheckMaxLength = 16;

struct GradcheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    // Entries whose analytic and numeric gradients are both below this are
    // only required to agree to within it absolutely.
    double floor = 1e-6;
    // Multiplies the analytic gradient of the loss node. Anything but 1 is a
    // deliberately broken rule used as a negative control.
    double fault_scale = 1.0;
};

struct GroupResult {
    ParameterGroup group;
    double max_rel_error = 0.0;
    std::size_t checked = 0;   // entries compared relatively
    std::size_t near_zero = 0; // entries compared absolutely
    double max_near_zero_gap = 0.0;
    std::size_t kinked = 0;        // stencils crossing a ReLU kink, not judged
    double max_kinked_error = 0.0;
    std::string worst;         // "name[index]" of the largest error
    bool passed = true;
};

struct GradcheckReport {
    std::vector<GroupResult> groups;
    std::size_t sequences = 0;
    std::size_t masked_pairs = 0;  // causal pairs removed by the cluster mask
    double seconds = 0.0;
    bool passed() const;
};

// The tiny configuration used when nothing is overridden: D=8, L=12, B=2,
// n=2, dropout 0, guess off.
ModelConfig gradcheck_defaults();

// Throws ConfigError for configurations that are too large or stochastic.
void validate_gradcheck_config(const ModelConfig& config);

// Central differences over every entry of every parameter on a small
// synthetic batch, with cluster labels frozen at their unperturbed values.
GradcheckReport run_gradcheck(const ModelConfig& config, const GradcheckOptions& options = {});

} // namespace lskt
