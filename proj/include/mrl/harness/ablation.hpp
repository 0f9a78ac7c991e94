#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mrl/harness/csv.hpp"
#include "mrl/harness/evaluation.hpp"
#include "mrl/harness/run_spec.hpp"
#include "mrl/harness/training.hpp"

namespace mrl::harness {

struct AblationResult {
  RunSpec spec;
  std::filesystem::path dir;
  std::string status = "ok";  // "ok" or "error: <message>"
  std::optional<EvaluationReport> report;
};

struct AblationTable {
  std::vector<AblationResult> results;  // one per spec, in order

  // Long format: one row per (run, metric); a failed run contributes one
  // row with empty metric fields.
  CsvTable long_format() const;
};

// Variants of `base` named by a preset: "aggregation" (fused feedback under
// each aggregation), "clusters" (each single cluster, the moral prompt and
// fused feedback), "modes" (base, shaping, fused and human feedback).
std::vector<RunSpec> preset_suite(std::string_view preset, const RunSpec& base);

// {"base": {...run spec...}, "runs": [{...overrides...}, ...]}; each run is
// the base merged with its overrides. {"base": ..., "preset": name} expands
// a preset instead.
std::vector<RunSpec> suite_from_json(const nlohmann::json& j);

// Trains and evaluates every spec under `root` (specs without an output
// directory get root/<label>). Feedback specs without a base checkpoint
// fine-tune a base model trained once per seed. A failing spec is
// recorded and the suite moves on. Writes root/ablation.csv.
AblationTable run_ablation_suite(const std::vector<RunSpec>& specs, const std::filesystem::path& root,
                                 const LogFn& log = {});

}  // namespace mrl::harness
