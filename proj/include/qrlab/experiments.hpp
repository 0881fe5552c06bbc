#pragma once

#include <string>
#include <vector>

#include "qrlab/config.hpp"
#include "qrlab/report.hpp"

namespace qrlab {

// Experiment kinds understood by parse_config/run_experiment, in CLI order.
const std::vector<std::string>& experiment_kinds();

// Kind-specific schema pass: validates `body` strictly against the schema of
// `kind`, resolves every default, and returns the normalized spec.  Throws
// std::invalid_argument with field paths on any violation.  Idempotent.
nlohmann::json resolve_spec(const std::string& kind, const nlohmann::json& body);

// Parse a full config document (meta keys seed/threads/out/plot plus the
// kind-specific body) and apply command-line overrides.  An optional "kind"
// key in the document must agree with the requested kind.
ExperimentConfig parse_config(const std::string& text, const std::string& kind,
                              const CliOverrides& overrides = {});

// Everything a finished run produces.  `report` deliberately excludes wall
// time; the CLI attaches a volatile "timing" block on write so reports stay
// byte-comparable across runs.
struct ExperimentResult {
    nlohmann::json report;
    std::vector<CsvFile> csv;
    std::vector<SvgFile> plots;
};

// A numerical failure that still has partial results worth persisting.  The
// CLI writes `partial` (status "failed" plus the failure marker) before
// exiting with code 3.
class ExperimentFailure : public NumericalError {
  public:
    ExperimentFailure(const std::string& message, ExperimentResult partial_result)
        : NumericalError(message), partial(std::move(partial_result)) {}

    ExperimentResult partial;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// JSON form of the specimen catalog (kind, dimension, declared distortion,
// capabilities, parameters, notes per entry).
nlohmann::json zoo_catalog();

// Write report/CSV/SVG artifacts into cfg.out_dir (created if missing).
// Returns the paths written, report first.
std::vector<std::filesystem::path> write_artifacts(const ExperimentConfig& cfg,
                                                   const ExperimentResult& result,
                                                   double seconds);

} // namespace qrlab
