#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qrlab/geometry.hpp"
#include "qrlab/sequence.hpp"

namespace qrlab {

// Strict-access view of one JSON object.  Every key has to be consumed by a
// typed getter; finish() rejects leftovers and reports them with their full
// field path, so a typo in a config file can never be silently ignored.
class StrictObject {
  public:
    StrictObject(const nlohmann::json& object, std::string path);

    bool has(const std::string& key) const;

    double number(const std::string& key);
    double number_or(const std::string& key, double fallback);
    long integer(const std::string& key);
    long integer_or(const std::string& key, long fallback);
    std::uint64_t seed_or(const std::string& key, std::uint64_t fallback);
    bool flag_or(const std::string& key, bool fallback);
    std::string text(const std::string& key);
    std::string text_or(const std::string& key, const std::string& fallback);
    std::vector<double> numbers(const std::string& key);
    std::vector<double> numbers_or(const std::string& key, std::vector<double> fallback);
    nlohmann::json node(const std::string& key);
    nlohmann::json node_or(const std::string& key, nlohmann::json fallback);

    // Throws std::invalid_argument listing every unconsumed key.
    void finish() const;

    const std::string& path() const { return path_; }
    std::string child_path(const std::string& key) const;
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

  private:
    const nlohmann::json& raw(const std::string& key);

    const nlohmann::json* object_;
    std::string path_;
    std::set<std::string> consumed_;
};

// Command-line overrides applied on top of the config document.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
    std::optional<bool> plot;
};

// A fully validated experiment description.  `spec` is the kind-specific
// body with every default made explicit, so re-parsing the echoed config
// reproduces the run exactly.
struct ExperimentConfig {
    std::string kind;
    nlohmann::json spec;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = ".";
    bool plot = false;

    nlohmann::json echo() const; // config block reproduced in reports
};

// ---------------------------------------------------------------------------
// Descriptor parsers shared by several experiment kinds.  Each takes the path
// of the node it parses so error messages point at the offending field.
// ---------------------------------------------------------------------------

// Sequence descriptor.  Either an explicit point list
//   {"points": [[1,0],[2,0],...]}
// or a closed-form expression evaluated at m = 1..truncation:
//   {"expr": "m*e1 + m^-1*e2", "truncation": 100}
// Expression grammar: sum/difference of terms, each term a '*'-separated
// product of an optional coefficient, an optional m-power (m, m^k with
// integer k), and one basis vector e1|e2|e3.  The result must satisfy
// validate_sequence.
PointSequence parse_sequence(const nlohmann::json& descriptor, const std::string& path);

// Box grid descriptor {"min": [...], "max": [...], "step": s}.
struct GridSpec {
    Vec min = Vec::zero(2);
    Vec max = Vec::zero(2);
    double step = 1.0;
    std::vector<int> shape;  // points per axis
    std::vector<Vec> points; // row-major, first axis fastest
};
GridSpec parse_grid(const nlohmann::json& descriptor, int dim, const std::string& path);

// Ray-anchor descriptor {"rays": [[...],...], "m_min": 1, "m_max": 100}.
// Anchors are m*u for every unit ray u, ordered by increasing modulus.
std::vector<Vec> default_anchor_rays(int dim);
std::vector<Vec> parse_anchors(const nlohmann::json& descriptor, int dim,
                               const std::string& path);

// Extended point descriptor: coordinate array or the string "infinity".
ExtendedPoint parse_value(const nlohmann::json& descriptor, int dim,
                          const std::string& path);

// Finite point descriptor: coordinate array of the right dimension.
Vec parse_point(const nlohmann::json& descriptor, int dim, const std::string& path);

} // namespace qrlab
