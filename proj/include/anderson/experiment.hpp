#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anderson/disorder.hpp"
#include "anderson/ids.hpp"
#include "anderson/lattice.hpp"
#include "anderson/point_process.hpp"
#include "anderson/poisson_stats.hpp"

namespace anderson {

inline constexpr const char* kVersion = "0.3.0";

// Exit codes of the command-line driver.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitValidation = 2, kExitCriterion = 3, kExitResource = 4 };

struct DecaySettings {
    double s = 0.5;
    double imag_z = 1e-2;
    long distance_min = 2;
    long distance_max = 20;
    long box_side = 81;
    std::size_t n_realizations = 500;
};

struct IdsSettings {
    long box_side = 1000;
    std::size_t n_realizations = 400;
    std::vector<double> epsilons{0.2, 0.14, 0.1, 0.07, 0.05};
    double grid_lo = -6.0;
    double grid_hi = 6.0;
    std::size_t grid_points = 121;
};

struct Thresholds {
    PoissonThresholds poisson;
    double r_squared_min = 0.9;
    double remainder_tolerance = 0.3;
    // Consecutive gap means must drop by more than this many combined sigmas.
    double gap_sigmas = 1.0;
};

struct ExperimentConfig {
    DisorderSpec disorder = uniform_disorder(-0.5, 0.5, 8.0);
    int dimension = 1;
    double lambda = 0.0;
    std::array<double, 2> localized_window{-1.0, 1.0};
    double alpha = 1.0;
    double interval_halfwidth = 1.0;
    Rectangle Q = unit_cube(1);
    std::vector<long> L_list{100, 200, 400};
    long poisson_L = 1000;
    double a_exponent = 0.5;
    double gamma_log = 2.0;
    long padding = -1; // < 0: 2 l_L
    // xi / eta sweep over L_list.
    std::size_t n_realizations = 10000;
    // Cell counts only (cheap), for the factorial-moment audit.
    std::size_t remainder_realizations = 400000;
    // eta_L counts at poisson_L.
    std::size_t poisson_realizations = 4000;
    std::uint64_t master_seed = 20240601;
    DecaySettings decay;
    IdsSettings ids;
    Thresholds thresholds;
    std::string output_dir = "results";

    // Throws ConfigError.
    void validate() const;
    WindowSpec window(long L) const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

// Sets a leaf addressed by a dotted path ("decay.s=0.25"); the value is parsed
// as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Stage tags for per-stage seeds.
enum class Stage : std::uint64_t { Decay = 1, Ids = 2, Sweep = 3, Stats = 4, Verify = 5 };
std::uint64_t seed_for(const ExperimentConfig& c, Stage stage);

struct RunOptions {
    int workers = 1;
    std::filesystem::path out_dir;
};

// Thrown when a pipeline stage fails; carries the stage name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what, int exit_code)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code)
    {
    }
    const std::string& stage() const { return stage_; }
    int exit_code() const { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

// Individual stages; each writes its artifacts to the output directory and
// returns its summary report.
nlohmann::json run_decay_stage(const ExperimentConfig& c, const RunOptions& options);
nlohmann::json run_ids_stage(const ExperimentConfig& c, const RunOptions& options);
nlohmann::json run_sweep_stage(const ExperimentConfig& c, const RunOptions& options);
// Reads the sample streams and the IDS report back from the output directory.
nlohmann::json run_stats_stage(const ExperimentConfig& c, const RunOptions& options);

// decay -> ids -> sweeps -> stats, plus manifest.json. Returns an ExitCode.
int run_pipeline(const ExperimentConfig& c, const RunOptions& options);

// Building blocks shared by the pipeline stages and the acceptance checks.

struct IntensityEstimate {
    FracDerivEstimate derivative;
    double D = 0.0;
    double D_error = 0.0;
    // |I|^alpha D |Q| with its propagated error.
    double target = 0.0;
    double target_error = 0.0;
};
IntensityEstimate intensity_from(const ExperimentConfig& c, const PooledSpectrum& pooled);
IntensityEstimate estimate_intensity(const ExperimentConfig& c, int workers);

BoxPartition partition_for(const ExperimentConfig& c, long L);

// eta_L for realizations 0..n-1 at scale L (cell counts only).
std::vector<long> eta_L_samples(const ExperimentConfig& c, long L, std::size_t n, int workers);

// Per-cell window counts pooled over realizations 0..n-1.
RemainderInput remainder_input(const ExperimentConfig& c, long L, std::size_t n, int workers);

struct GapLevel {
    long L = 0;
    GapEstimate gap;
};
struct GapTrend {
    std::vector<GapLevel> levels;
    bool decreasing = false;
};
// Each consecutive drop must exceed `sigmas` combined standard errors.
GapTrend gap_trend(std::vector<GapLevel> levels, double sigmas);

void to_json(nlohmann::json& j, const GapTrend& t);

// Sample stream of the point-process sweep at one scale, one JSON line per
// sample, ordered by realization. Byte-identical for any worker count.
std::string sample_stream(const ExperimentConfig& c, long L, std::size_t n_realizations, int workers);

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    nlohmann::json data;
};

// Runs the numbered acceptance checks (all when `only` is empty).
std::vector<CriterionResult> verify_suite(const ExperimentConfig& c, int workers, const std::vector<int>& only = {});
std::string format_criterion(const CriterionResult& r);

// SVG figures and a text summary from the reports in the output directory.
std::vector<std::filesystem::path> render_report(const std::filesystem::path& out_dir);

// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

} // namespace anderson
