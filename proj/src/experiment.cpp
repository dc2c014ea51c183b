#include "anderson/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "anderson/errors.hpp"
#include "anderson/green_decay.hpp"
#include "anderson/parallel.hpp"
#include "anderson/statistics.hpp"

namespace anderson {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const
{
    disorder.validate();
    if (dimension < 1 || dimension > kMaxDim)
        throw ConfigError("dimension must be 1, 2 or 3");
    Q.validate();
    if (Q.dim() != dimension)
        throw ConfigError("Q has dimension " + std::to_string(Q.dim()) + " but the lattice has " +
                          std::to_string(dimension));
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("alpha must lie in (0, 1]");
    if (!(localized_window[0] < localized_window[1]))
        throw ConfigError("localized_window must be [a, b] with a < b");
    if (lambda < localized_window[0] || lambda > localized_window[1])
        throw ConfigError("lambda outside the localized window");
    if (!(interval_halfwidth > 0.0))
        throw ConfigError("interval_halfwidth must be positive");
    if (!(a_exponent > 0.0 && a_exponent < 1.0))
        throw ConfigError("a_exponent must lie in (0, 1)");
    if (!(gamma_log > 0.0))
        throw ConfigError("gamma_log must be positive");
    if (L_list.empty())
        throw ConfigError("L_list is empty");
    std::vector<long> scales = L_list;
    scales.push_back(poisson_L);
    for (long L : scales) {
        if (L < 2)
            throw ConfigError("every L must be at least 2");
        const long l = sub_scale(L, a_exponent);
        if (L < 2 * l)
            throw ConfigError("L = " + std::to_string(L) + " is smaller than 2 l_L = " + std::to_string(2 * l));
    }
    for (std::size_t i = 1; i < L_list.size(); ++i)
        if (L_list[i] <= L_list[i - 1])
            throw ConfigError("L_list must be strictly increasing");
    if (n_realizations < 1 || remainder_realizations < 1)
        throw ConfigError("realization counts must be positive");
    if (poisson_realizations < thresholds.poisson.min_samples)
        throw ConfigError("poisson_realizations below the minimum sample size " +
                          std::to_string(thresholds.poisson.min_samples));

    if (!(decay.s > 0.0 && decay.s < 1.0))
        throw ConfigError("decay.s must lie in (0, 1)");
    if (!(decay.imag_z > 0.0))
        throw ConfigError("decay.imag_z must be positive");
    if (decay.distance_min < 1 || decay.distance_max - decay.distance_min < 3)
        throw ConfigError("decay distances need at least four values starting at 1 or more");
    if (decay.box_side / 2 + decay.distance_max >= decay.box_side)
        throw ConfigError("decay.box_side too small for decay.distance_max");
    if (decay.n_realizations < 100)
        throw ConfigError("decay.n_realizations must be at least 100");

    if (ids.box_side < 2 || ids.n_realizations < 1)
        throw ConfigError("ids.box_side >= 2 and ids.n_realizations >= 1 required");
    if (ids.epsilons.empty())
        throw ConfigError("ids.epsilons is empty");
    for (std::size_t i = 0; i < ids.epsilons.size(); ++i)
        if (!(ids.epsilons[i] > 0.0) || (i > 0 && !(ids.epsilons[i] < ids.epsilons[i - 1])))
            throw ConfigError("ids.epsilons must be positive and strictly decreasing");
    if (ids.grid_points < 2 || !(ids.grid_lo < ids.grid_hi))
        throw ConfigError("ids grid needs grid_lo < grid_hi and at least two points");

    const auto& t = thresholds;
    if (!(t.poisson.tv_max > 0.0) || !(t.poisson.dispersion_lo < t.poisson.dispersion_hi) ||
        !(t.poisson.intensity_rel > 0.0) || !(t.r_squared_min > 0.0 && t.r_squared_min <= 1.0) ||
        !(t.remainder_tolerance > 0.0) || t.gap_sigmas < 0.0)
        throw ConfigError("thresholds out of range");
}

WindowSpec ExperimentConfig::window(long L) const
{
    WindowSpec w;
    w.lambda = lambda;
    w.c = interval_halfwidth;
    w.Q = Q;
    w.L = L;
    w.alpha = alpha;
    return w;
}

void to_json(json& j, const ExperimentConfig& c)
{
    const auto& p = c.thresholds.poisson;
    j = json{{"disorder", c.disorder},
             {"dimension", c.dimension},
             {"lambda", c.lambda},
             {"localized_window", c.localized_window},
             {"alpha", c.alpha},
             {"interval_halfwidth", c.interval_halfwidth},
             {"Q", c.Q},
             {"L_list", c.L_list},
             {"poisson_L", c.poisson_L},
             {"a_exponent", c.a_exponent},
             {"gamma_log", c.gamma_log},
             {"padding", c.padding},
             {"n_realizations", c.n_realizations},
             {"remainder_realizations", c.remainder_realizations},
             {"poisson_realizations", c.poisson_realizations},
             {"master_seed", c.master_seed},
             {"decay",
              {{"s", c.decay.s},
               {"imag_z", c.decay.imag_z},
               {"distance_min", c.decay.distance_min},
               {"distance_max", c.decay.distance_max},
               {"box_side", c.decay.box_side},
               {"n_realizations", c.decay.n_realizations}}},
             {"ids",
              {{"box_side", c.ids.box_side},
               {"n_realizations", c.ids.n_realizations},
               {"epsilons", c.ids.epsilons},
               {"grid_lo", c.ids.grid_lo},
               {"grid_hi", c.ids.grid_hi},
               {"grid_points", c.ids.grid_points}}},
             {"thresholds",
              {{"tv_max", p.tv_max},
               {"dispersion_lo", p.dispersion_lo},
               {"dispersion_hi", p.dispersion_hi},
               {"intensity_rel", p.intensity_rel},
               {"chi_square_p_min", p.chi_square_p_min},
               {"min_samples", p.min_samples},
               {"r_squared_min", c.thresholds.r_squared_min},
               {"remainder_tolerance", c.thresholds.remainder_tolerance},
               {"gap_sigmas", c.thresholds.gap_sigmas}}},
             {"output_dir", c.output_dir}};
}

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& target)
{
    if (j.contains(key))
        target = j.at(key).get<T>();
}

const std::set<std::string> kTopKeys{"disorder",      "dimension",      "lambda",
                                     "localized_window", "alpha",       "interval_halfwidth",
                                     "Q",             "L_list",         "poisson_L",
                                     "a_exponent",    "gamma_log",      "padding",
                                     "n_realizations", "remainder_realizations", "poisson_realizations",
                                     "master_seed",   "decay",          "ids",
                                     "thresholds",    "output_dir"};

} // namespace

void from_json(const json& j, ExperimentConfig& c)
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    for (const auto& item : j.items())
        if (!kTopKeys.count(item.key()))
            throw ConfigError("unknown config key '" + item.key() + "'");
    try {
        read_if(j, "disorder", c.disorder);
        read_if(j, "dimension", c.dimension);
        read_if(j, "lambda", c.lambda);
        read_if(j, "localized_window", c.localized_window);
        read_if(j, "alpha", c.alpha);
        read_if(j, "interval_halfwidth", c.interval_halfwidth);
        if (j.contains("Q"))
            c.Q = j.at("Q").get<Rectangle>();
        else
            c.Q = unit_cube(c.dimension);
        read_if(j, "L_list", c.L_list);
        read_if(j, "poisson_L", c.poisson_L);
        read_if(j, "a_exponent", c.a_exponent);
        read_if(j, "gamma_log", c.gamma_log);
        read_if(j, "padding", c.padding);
        read_if(j, "n_realizations", c.n_realizations);
        read_if(j, "remainder_realizations", c.remainder_realizations);
        read_if(j, "poisson_realizations", c.poisson_realizations);
        read_if(j, "master_seed", c.master_seed);
        read_if(j, "output_dir", c.output_dir);
        if (j.contains("decay")) {
            const auto& d = j.at("decay");
            read_if(d, "s", c.decay.s);
            read_if(d, "imag_z", c.decay.imag_z);
            read_if(d, "distance_min", c.decay.distance_min);
            read_if(d, "distance_max", c.decay.distance_max);
            read_if(d, "box_side", c.decay.box_side);
            read_if(d, "n_realizations", c.decay.n_realizations);
        }
        if (j.contains("ids")) {
            const auto& d = j.at("ids");
            read_if(d, "box_side", c.ids.box_side);
            read_if(d, "n_realizations", c.ids.n_realizations);
            read_if(d, "epsilons", c.ids.epsilons);
            read_if(d, "grid_lo", c.ids.grid_lo);
            read_if(d, "grid_hi", c.ids.grid_hi);
            read_if(d, "grid_points", c.ids.grid_points);
        }
        if (j.contains("thresholds")) {
            const auto& t = j.at("thresholds");
            auto& p = c.thresholds.poisson;
            read_if(t, "tv_max", p.tv_max);
            read_if(t, "dispersion_lo", p.dispersion_lo);
            read_if(t, "dispersion_hi", p.dispersion_hi);
            read_if(t, "intensity_rel", p.intensity_rel);
            read_if(t, "chi_square_p_min", p.chi_square_p_min);
            read_if(t, "min_samples", p.min_samples);
            read_if(t, "r_squared_min", c.thresholds.r_squared_min);
            read_if(t, "remainder_tolerance", c.thresholds.remainder_tolerance);
            read_if(t, "gap_sigmas", c.thresholds.gap_sigmas);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

void apply_override(json& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key.path=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }

    json* node = &config;
    std::stringstream parts(path);
    std::string key;
    std::vector<std::string> keys;
    while (std::getline(parts, key, '.'))
        keys.push_back(key);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const bool last = i + 1 == keys.size();
        if (node->is_array()) {
            std::size_t index = 0;
            try {
                index = std::stoul(keys[i]);
            } catch (const std::exception&) {
                throw ConfigError("override path '" + path + "': '" + keys[i] + "' is not an array index");
            }
            if (index >= node->size())
                throw ConfigError("override path '" + path + "': index out of range");
            node = &(*node)[index];
        } else if (node->is_object()) {
            if (!node->contains(keys[i]))
                throw ConfigError("override path '" + path + "' does not name a config entry");
            node = &(*node)[keys[i]];
        } else {
            throw ConfigError("override path '" + path + "' descends into a scalar");
        }
        if (last)
            *node = value;
    }
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides)
{
    json raw = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config " + path.string());
        try {
            in >> raw;
        } catch (const json::exception& e) {
            throw ConfigError("cannot parse " + path.string() + ": " + e.what());
        }
    }
    ExperimentConfig c = raw.get<ExperimentConfig>();
    // Overrides address the full schema, so apply them to the normalized form.
    json full = c;
    for (const auto& o : overrides)
        apply_override(full, o);
    c = full.get<ExperimentConfig>();
    c.validate();
    return c;
}

std::uint64_t seed_for(const ExperimentConfig& c, Stage stage)
{
    return stage_seed(c.master_seed, static_cast<std::uint64_t>(stage));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ResourceError("cannot write " + path.string());
    out << text;
    if (!out)
        throw ResourceError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j)
{
    write_text(path, j.dump(2) + "\n");
}

json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("missing " + path.string() + " (run the producing stage first)");
    return json::parse(in);
}

std::vector<json> read_lines(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("missing " + path.string() + " (run the sweep stage first)");
    std::vector<json> rows;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            rows.push_back(json::parse(line));
    return rows;
}

fs::path prepare_dir(const RunOptions& options)
{
    const fs::path dir = options.out_dir.empty() ? fs::path("results") : options.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ResourceError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::vector<long> decay_distances(const DecaySettings& d)
{
    std::vector<long> out;
    for (long r = d.distance_min; r <= d.distance_max; ++r)
        out.push_back(r);
    return out;
}

std::vector<double> decay_probes(const ExperimentConfig& c)
{
    const double a = c.localized_window[0], b = c.localized_window[1];
    std::vector<double> probes{c.lambda};
    for (double e : {a, 0.5 * (a + b), b})
        if (std::find(probes.begin(), probes.end(), e) == probes.end())
            probes.push_back(e);
    return probes;
}

std::vector<double> ids_grid(const IdsSettings& s)
{
    std::vector<double> grid(s.grid_points);
    for (std::size_t k = 0; k < s.grid_points; ++k)
        grid[k] = s.grid_lo + (s.grid_hi - s.grid_lo) * static_cast<double>(k) / static_cast<double>(s.grid_points - 1);
    return grid;
}

std::vector<long> all_scales(const ExperimentConfig& c)
{
    std::vector<long> scales = c.L_list;
    if (std::find(scales.begin(), scales.end(), c.poisson_L) == scales.end())
        scales.push_back(c.poisson_L);
    std::sort(scales.begin(), scales.end());
    return scales;
}

RealizationOptions counts_only()
{
    RealizationOptions o;
    o.with_xi = false;
    o.with_eta_p = false;
    return o;
}

std::vector<RealizationRecord> sweep_records(const ExperimentConfig& c, long L, std::size_t n, int workers)
{
    const WindowSpec w = c.window(L);
    const BoxPartition partition = partition_for(c, L);
    RealizationOptions options;
    options.padding = c.padding;
    const std::uint64_t seed = seed_for(c, Stage::Sweep);
    return parallel_map(n, workers, [&](std::size_t r) {
        return simulate_realization(c.disorder, w, partition, seed, r, options);
    });
}

std::string format_stream(const ExperimentConfig& c, long L, const std::vector<RealizationRecord>& records)
{
    const WindowSpec w = c.window(L);
    std::string out;
    auto emit = [&](MeasureKind kind, std::size_t r, double value, long cell) {
        json j = sample_record(CountSample{kind, value, r, w});
        if (cell >= 0)
            j["cell"] = cell;
        out += j.dump();
        out += '\n';
    };
    for (const auto& rec : records) {
        emit(MeasureKind::Xi, rec.realization, rec.xi, -1);
        emit(MeasureKind::EtaP, rec.realization, rec.eta_p_sum, -1);
        emit(MeasureKind::EtaL, rec.realization, static_cast<double>(rec.eta_L), -1);
        for (std::size_t i = 0; i < rec.cell_counts.size(); ++i)
            if (rec.cell_counts[i] != 0)
                emit(MeasureKind::EtaTildeP, rec.realization, static_cast<double>(rec.cell_counts[i]),
                     static_cast<long>(i));
    }
    return out;
}

// Chunks keep the per-task overhead low for the cheap counting sweeps.
constexpr std::size_t kChunk = 1000;

template <typename PerRealization>
auto chunked(std::size_t n, int workers, PerRealization&& f)
{
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    return parallel_map(chunks, workers, [&](std::size_t k) {
        std::vector<decltype(f(std::size_t{}))> part;
        const std::size_t end = std::min(n, (k + 1) * kChunk);
        part.reserve(end - k * kChunk);
        for (std::size_t r = k * kChunk; r < end; ++r)
            part.push_back(f(r));
        return part;
    });
}

} // namespace

BoxPartition partition_for(const ExperimentConfig& c, long L)
{
    return partition_box(L, c.a_exponent, c.Q, c.gamma_log);
}

IntensityEstimate intensity_from(const ExperimentConfig& c, const PooledSpectrum& pooled)
{
    IntensityEstimate est;
    est.derivative = fractional_derivative(pooled, c.lambda, c.alpha, c.ids.epsilons);
    est.D = est.derivative.D_alpha;
    // Counting error of the ratio that attains the maximum over the tail.
    const auto& eps = est.derivative.epsilons;
    const auto& ratios = est.derivative.ratios;
    std::size_t arg = ratios.size() / 2;
    for (std::size_t k = ratios.size() / 2; k < ratios.size(); ++k)
        if (ratios[k] >= ratios[arg])
            arg = k;
    if (!ratios.empty())
        est.D_error = pooled.measure_error(c.lambda - eps[arg], c.lambda + eps[arg]) / std::pow(2.0 * eps[arg], c.alpha);
    const double scale = std::pow(2.0 * c.interval_halfwidth, c.alpha) * c.Q.volume();
    est.target = scale * est.D;
    est.target_error = scale * est.D_error;
    return est;
}

IntensityEstimate estimate_intensity(const ExperimentConfig& c, int workers)
{
    const PooledSpectrum pooled = sample_pooled_spectrum(c.disorder, c.dimension, c.ids.box_side, c.ids.n_realizations,
                                                         seed_for(c, Stage::Ids), workers);
    return intensity_from(c, pooled);
}

std::vector<long> eta_L_samples(const ExperimentConfig& c, long L, std::size_t n, int workers)
{
    const WindowSpec w = c.window(L);
    w.validate();
    const BoxPartition partition = partition_for(c, L);
    const std::uint64_t seed = seed_for(c, Stage::Sweep);
    const auto parts = chunked(n, workers, [&](std::size_t r) {
        return simulate_realization(c.disorder, w, partition, seed, r, counts_only()).eta_L;
    });
    std::vector<long> out;
    out.reserve(n);
    for (const auto& p : parts)
        out.insert(out.end(), p.begin(), p.end());
    return out;
}

RemainderInput remainder_input(const ExperimentConfig& c, long L, std::size_t n, int workers)
{
    const WindowSpec w = c.window(L);
    w.validate();
    const BoxPartition partition = partition_for(c, L);
    const std::uint64_t seed = seed_for(c, Stage::Sweep);
    const auto parts = chunked(n, workers, [&](std::size_t r) {
        return simulate_realization(c.disorder, w, partition, seed, r, counts_only()).cell_counts;
    });
    RemainderInput in;
    in.L = L;
    in.sub_scale = partition.sub_scale;
    in.gamma_size = partition.cells.size();
    in.cell_counts.reserve(n * partition.cells.size());
    for (const auto& p : parts)
        for (const auto& counts : p)
            in.cell_counts.insert(in.cell_counts.end(), counts.begin(), counts.end());
    return in;
}

GapTrend gap_trend(std::vector<GapLevel> levels, double sigmas)
{
    GapTrend t;
    t.levels = std::move(levels);
    t.decreasing = t.levels.size() >= 2;
    for (std::size_t k = 1; k < t.levels.size(); ++k) {
        const auto& a = t.levels[k - 1].gap;
        const auto& b = t.levels[k].gap;
        const double combined = std::hypot(a.std_error, b.std_error);
        if (!(a.mean - b.mean > sigmas * combined))
            t.decreasing = false;
    }
    return t;
}

void to_json(json& j, const GapTrend& t)
{
    j = json{{"decreasing", t.decreasing}, {"levels", json::array()}};
    for (const auto& l : t.levels)
        j["levels"].push_back({{"L", l.L}, {"mean", l.gap.mean}, {"stderr", l.gap.std_error}, {"n", l.gap.n}});
}

std::string sample_stream(const ExperimentConfig& c, long L, std::size_t n_realizations, int workers)
{
    return format_stream(c, L, sweep_records(c, L, n_realizations, workers));
}

json run_decay_stage(const ExperimentConfig& c, const RunOptions& options)
{
    const fs::path dir = prepare_dir(options);
    const BoxGeometry geom = BoxGeometry::cube(c.dimension, 0, c.decay.box_side);
    const auto distances = decay_distances(c.decay);
    const auto pairs = axis_pairs(geom, distances);
    const std::uint64_t seed = seed_for(c, Stage::Decay);

    json report = json::object();
    report["probes"] = json::array();
    double r_hat = std::numeric_limits<double>::infinity();
    bool first = true;
    for (double energy : decay_probes(c)) {
        const DecayEstimate e = estimate_fractional_moments(c.disorder, geom, c.decay.s, {energy, c.decay.imag_z}, pairs,
                                                            c.decay.n_realizations, seed, options.workers);
        json probe = e;
        probe["energy"] = energy;
        probe["fit_ok"] = e.rate > 0.0 && e.r_squared > c.thresholds.r_squared_min;
        report["probes"].push_back(probe);
        r_hat = std::min(r_hat, e.rate);
        if (first) {
            std::ofstream csv(dir / "decay.csv");
            write_decay_csv(csv, e);
            first = false;
        }
    }
    report["r_hat"] = r_hat;
    report["gamma_log"] = c.gamma_log;
    if (r_hat > 0.0) {
        const double threshold = margin_threshold(r_hat, c.decay.s, c.dimension, c.alpha, c.a_exponent);
        report["gamma_log_threshold"] = threshold;
        report["gamma_log_ok"] = c.gamma_log > threshold;
    } else {
        report["gamma_log_threshold"] = nullptr;
        report["gamma_log_ok"] = false;
    }
    write_json(dir / "decay.json", report);
    if (!report["gamma_log_ok"].get<bool>())
        throw ConfigError(r_hat > 0.0 ? "gamma_log = " + std::to_string(c.gamma_log) + " does not exceed the decay threshold " +
                                            std::to_string(report["gamma_log_threshold"].get<double>())
                                      : "no positive decay rate measured; localization not witnessed");
    return report;
}

json run_ids_stage(const ExperimentConfig& c, const RunOptions& options)
{
    const fs::path dir = prepare_dir(options);
    const PooledSpectrum pooled = sample_pooled_spectrum(c.disorder, c.dimension, c.ids.box_side, c.ids.n_realizations,
                                                         seed_for(c, Stage::Ids), options.workers);
    const auto grid = ids_grid(c.ids);
    const double bound = 2.0 * c.dimension + std::abs(c.disorder.coupling) *
                                                 std::max(std::abs(c.disorder.v_min), std::abs(c.disorder.v_max));
    if (grid.front() < -bound - 1e-12 || grid.back() > bound + 1e-12)
        throw ConfigError("IDS grid leaves the almost-sure spectrum bound +-" + std::to_string(bound));

    IdsTable table;
    table.energies = grid;
    table.box_size = static_cast<Eigen::Index>(pooled.total_sites() / static_cast<double>(pooled.n_realizations()));
    table.n_realizations = pooled.n_realizations();
    const double lowest = -bound - 1.0;
    for (double E : grid) {
        table.nu_hat.push_back(pooled.measure(lowest, E));
        table.std_errors.push_back(pooled.measure_error(lowest, E));
    }
    {
        std::ofstream csv(dir / "ids.csv");
        write_ids_csv(csv, table);
    }

    const IntensityEstimate intensity = intensity_from(c, pooled);
    const auto scales = all_scales(c);
    const MeasureScan scan =
        scaled_measure_scan(pooled, c.lambda, c.interval_halfwidth, c.alpha, c.dimension, scales);
    {
        std::ofstream csv(dir / "scan.csv");
        write_scan_csv(csv, scan);
    }

    json report{{"box_side", c.ids.box_side},
                {"n_realizations", c.ids.n_realizations},
                {"resolution", pooled.resolution()},
                {"frac_derivative", intensity.derivative},
                {"D_hat", intensity.D},
                {"D_error", intensity.D_error},
                {"target_intensity", intensity.target},
                {"target_error", intensity.target_error},
                {"scan", scan}};
    write_json(dir / "ids.json", report);
    return report;
}

json run_sweep_stage(const ExperimentConfig& c, const RunOptions& options)
{
    const fs::path dir = prepare_dir(options);
    json summary{{"levels", json::array()}};
    for (long L : c.L_list) {
        const BoxPartition partition = partition_for(c, L);
        const auto records = sweep_records(c, L, c.n_realizations, options.workers);
        write_text(dir / ("samples_L" + std::to_string(L) + ".jsonl"), format_stream(c, L, records));

        const RemainderInput cells = remainder_input(c, L, c.remainder_realizations, options.workers);
        std::string lines;
        const WindowSpec w = c.window(L);
        for (std::size_t k = 0; k < cells.cell_counts.size(); ++k) {
            if (cells.cell_counts[k] == 0)
                continue;
            json j = sample_record(CountSample{MeasureKind::EtaTildeP, static_cast<double>(cells.cell_counts[k]),
                                               k / cells.gamma_size, w});
            j["cell"] = k % cells.gamma_size;
            lines += j.dump();
            lines += '\n';
        }
        write_text(dir / ("cells_L" + std::to_string(L) + ".jsonl"), lines);
        summary["levels"].push_back({{"L", L},
                                     {"n_realizations", c.n_realizations},
                                     {"remainder_realizations", c.remainder_realizations},
                                     {"sub_scale", partition.sub_scale},
                                     {"gamma_size", partition.cells.size()},
                                     {"interior_margin", partition.interior_margin},
                                     {"window", w}});
    }

    const auto eta = eta_L_samples(c, c.poisson_L, c.poisson_realizations, options.workers);
    const WindowSpec w = c.window(c.poisson_L);
    std::string lines;
    for (std::size_t r = 0; r < eta.size(); ++r) {
        lines += sample_record(CountSample{MeasureKind::EtaL, static_cast<double>(eta[r]), r, w}).dump();
        lines += '\n';
    }
    write_text(dir / ("poisson_L" + std::to_string(c.poisson_L) + ".jsonl"), lines);
    summary["poisson"] = {{"L", c.poisson_L}, {"n_realizations", c.poisson_realizations}, {"window", w}};
    write_json(dir / "sweep.json", summary);
    return summary;
}

json run_stats_stage(const ExperimentConfig& c, const RunOptions& options)
{
    const fs::path dir = prepare_dir(options);
    const json ids = read_json(dir / "ids.json");
    const json sweep = read_json(dir / "sweep.json");
    json stats = json::object();

    // Poisson shape and intensity at poisson_L.
    std::vector<long> eta;
    for (const auto& row : read_lines(dir / ("poisson_L" + std::to_string(c.poisson_L) + ".jsonl")))
        eta.push_back(std::lround(row.at("value").get<double>()));
    const double target = ids.at("target_intensity").get<double>();
    const double target_error = ids.at("target_error").get<double>();
    const auto dist = CountDistribution::from_samples(eta, target, target_error);
    const PoissonFitReport fit = poisson_fit(dist, c.thresholds.poisson);
    write_json(dir / "poisson_fit.json", json{{"fit", fit}, {"distribution", dist}});
    stats["poisson"] = fit;

    std::vector<double> t_grid;
    for (int k = -20; k <= 20; ++k)
        t_grid.push_back(std::numbers::pi * k / 20.0);
    const CharFnProfile profile = charfn_profile(eta, t_grid, target);
    write_json(dir / "charfn.json", profile);
    stats["charfn_sup_distance"] = profile.sup_distance;

    // xi / eta gap per L and the factorial-moment audit.
    std::vector<GapLevel> gaps;
    std::vector<RemainderInput> remainder;
    for (const auto& level : sweep.at("levels")) {
        const long L = level.at("L").get<long>();
        const std::size_t n = level.at("n_realizations").get<std::size_t>();
        std::vector<double> xi(n, 0.0), eta_l(n, 0.0);
        for (const auto& row : read_lines(dir / ("samples_L" + std::to_string(L) + ".jsonl"))) {
            const auto r = row.at("realization").get<std::size_t>();
            const auto kind = row.at("kind").get<std::string>();
            if (r >= n)
                throw ConfigError("sample stream for L = " + std::to_string(L) + " has an out-of-range realization");
            if (kind == to_string(MeasureKind::Xi))
                xi[r] = row.at("value").get<double>();
            else if (kind == to_string(MeasureKind::EtaL))
                eta_l[r] = row.at("value").get<double>();
        }
        std::vector<double> gap(n);
        for (std::size_t r = 0; r < n; ++r)
            gap[r] = std::abs(xi[r] - eta_l[r]);
        const MeanEstimate m = estimate_mean(gap);
        gaps.push_back({L, {m.mean, m.stderr_mean, m.n}});

        RemainderInput in;
        in.L = L;
        in.sub_scale = level.at("sub_scale").get<long>();
        in.gamma_size = level.at("gamma_size").get<std::size_t>();
        const std::size_t R = level.at("remainder_realizations").get<std::size_t>();
        in.cell_counts.assign(R * in.gamma_size, 0);
        for (const auto& row : read_lines(dir / ("cells_L" + std::to_string(L) + ".jsonl"))) {
            const auto r = row.at("realization").get<std::size_t>();
            const auto cell = row.at("cell").get<std::size_t>();
            if (r >= R || cell >= in.gamma_size)
                throw ConfigError("cell stream for L = " + std::to_string(L) + " is inconsistent with sweep.json");
            in.cell_counts[r * in.gamma_size + cell] = std::lround(row.at("value").get<double>());
        }
        remainder.push_back(std::move(in));
    }
    const GapTrend trend = gap_trend(gaps, c.thresholds.gap_sigmas);
    write_json(dir / "gap.json", trend);
    stats["gap"] = trend;
    const RemainderAudit audit =
        remainder_audit(remainder, c.dimension, c.a_exponent, c.thresholds.remainder_tolerance);
    write_json(dir / "remainder.json", audit);
    stats["remainder"] = audit;

    // Wegner / Minami on one cell of the Poisson scale.
    const BoxPartition partition = partition_for(c, c.poisson_L);
    const WindowSpec w = c.window(c.poisson_L);
    json inequalities = json::object();
    if (c.disorder.coupling > 0.0) {
        const std::uint64_t seed = seed_for(c, Stage::Stats);
        const BoxGeometry& cell = partition.cells.front();
        inequalities["wegner"] = wegner_check(c.disorder, cell, w.energy_lo(), w.energy_hi(), 2000, seed, options.workers);
        inequalities["minami"] = minami_check(c.disorder, cell, w.energy_lo(), w.energy_hi(), 2000, seed, options.workers);
    } else {
        inequalities["note"] = "zero coupling: no Wegner constant";
    }
    write_json(dir / "inequalities.json", inequalities);
    stats["inequalities"] = inequalities;
    write_json(dir / "stats.json", stats);
    return stats;
}

std::string file_digest(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ResourceError("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw ResourceError("SHA-256 unavailable");
    }
    std::vector<char> buffer(1 << 16);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        if (in.gcount() > 0)
            EVP_DigestUpdate(ctx, buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

namespace {

int exit_code_for(const std::exception_ptr& error)
{
    try {
        std::rethrow_exception(error);
    } catch (const ConfigError&) {
        return kExitValidation;
    } catch (const DomainError&) {
        return kExitValidation;
    } catch (const ResourceError&) {
        return kExitResource;
    } catch (...) {
        return kExitFailure;
    }
}

void write_manifest(const fs::path& dir, const ExperimentConfig& c, const RunOptions& options, const json& stages,
                    const std::string& failed_stage, const std::string& error)
{
    json manifest{{"version", kVersion},
                  {"config", c},
                  {"workers", options.workers},
                  {"stage_seeds",
                   {{"decay", seed_for(c, Stage::Decay)},
                    {"ids", seed_for(c, Stage::Ids)},
                    {"sweep", seed_for(c, Stage::Sweep)},
                    {"stats", seed_for(c, Stage::Stats)}}},
                  {"stages", stages}};
    if (!failed_stage.empty())
        manifest["failed_stage"] = {{"stage", failed_stage}, {"error", error}};
    json digests = json::object();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        digests[f.filename().string()] = file_digest(f);
    manifest["sha256"] = digests;
    write_json(dir / "manifest.json", manifest);
}

} // namespace

int run_pipeline(const ExperimentConfig& c, const RunOptions& options)
{
    c.validate();
    const fs::path dir = prepare_dir(options);
    using StageFn = json (*)(const ExperimentConfig&, const RunOptions&);
    const std::vector<std::pair<std::string, StageFn>> stages{
        {"decay", run_decay_stage}, {"ids", run_ids_stage}, {"sweep", run_sweep_stage}, {"stats", run_stats_stage}};
    json timings = json::array();
    for (const auto& [name, fn] : stages) {
        const auto start = Clock::now();
        try {
            fn(c, options);
        } catch (const std::exception& e) {
            timings.push_back({{"stage", name}, {"seconds", seconds_since(start)}, {"status", "failed"}});
            const int code = exit_code_for(std::current_exception());
            write_manifest(dir, c, options, timings, name, e.what());
            throw StageError(name, e.what(), code);
        }
        timings.push_back({{"stage", name}, {"seconds", seconds_since(start)}, {"status", "ok"}});
    }
    write_manifest(dir, c, options, timings, "", "");
    return kExitOk;
}

std::string format_criterion(const CriterionResult& r)
{
    std::ostringstream o;
    o << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id << " " << r.name << " (" << std::fixed
      << std::setprecision(1) << r.seconds << " s): " << r.detail;
    return o.str();
}

} // namespace anderson
