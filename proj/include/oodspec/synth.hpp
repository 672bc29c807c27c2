#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oodspec/ingest.hpp"
#include "oodspec/metrics.hpp"

namespace oodspec {

// Synthetic observer. Correctness per trial: with probability `coupling` the
// observer consults a shared per-image difficulty draw, otherwise a private
// draw; either way the marginal accuracy is exact. Error labels come from the
// observer's confusion kernel; with probability `label_coupling` the draw
// uses a shared per-image stream (same kernel shape across observers =>
// correlated error labels), otherwise a private stream. label_coupling
// defaults to 0: private error labels, the baseline behavior.
struct ObserverSpec {
    std::string system_id;
    SystemKind kind = SystemKind::model;
    std::string family;
    std::string subfamily;
    double accuracy = 1.0;      // target probability in [0,1]
    double coupling = 0.0;      // shared-difficulty weight in [0,1]
    double label_coupling = 0.0;
    // C x C row-stochastic matrix over error targets (zero diagonal).
    // Empty = uniform over the C-1 wrong labels.
    std::vector<std::vector<double>> confusion_kernel;
    std::uint64_t seed = 0;  // per-observer stream offset
};

struct ConditionSpec {
    std::string distortion_type;
    std::string distortion_level;
    // Effective accuracy per observer = clamp(observer.accuracy *
    // accuracy_scale) unless accuracy_override pins the condition to an
    // absolute level (e.g. exact chance).
    double accuracy_scale = 1.0;
    std::optional<double> accuracy_override;
    // Rotates sampled error labels by a fixed offset around the category
    // ring (stepping past the true class), so conditions can carry their own
    // error signature while observers keep one kernel. 0 = off.
    int label_rotation = 0;
};

struct ScenarioSpec {
    std::vector<std::string> categories;
    int images_per_condition = 0;
    std::vector<ConditionSpec> conditions;
    std::vector<ObserverSpec> observers;
};

ScenarioSpec scenario_from_json_text(const std::string& text);
ScenarioSpec scenario_from_json_file(const std::string& path);

// Deterministic per (spec, seed); every trial of every observer emitted.
// Throws invalid_kernel / invalid_config.
TrialTable simulate_observers(const ScenarioSpec& spec, std::uint64_t seed);

struct OracleMetrics {
    std::optional<double> ec;
    std::optional<double> ma;
    std::optional<double> cled;
};

// Brute-force reference implementation of the three pairwise metrics,
// written straight from their definitions and sharing no code with the
// metrics module. Same Undefined semantics (absent optionals).
OracleMetrics oracle_metrics(const ResponseSet& a, const ResponseSet& b,
                             const CategorySet& categories, double alpha = 0.5);

}  // namespace oodspec
