#include <cmath>
#include <fstream>
#include <sstream>

#include "anderson/errors.hpp"
#include "anderson/experiment.hpp"
#include "anderson/svg.hpp"

namespace anderson {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<json> try_read(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        return std::nullopt;
    return json::parse(in);
}

void save(const fs::path& path, const std::string& text, std::vector<fs::path>& written)
{
    std::ofstream out(path);
    if (!out)
        throw ResourceError("cannot write " + path.string());
    out << text;
    written.push_back(path);
}

std::vector<std::vector<double>> read_csv(const fs::path& path)
{
    std::vector<std::vector<double>> rows;
    std::ifstream in(path);
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ','))
            row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

} // namespace

std::vector<fs::path> render_report(const fs::path& dir)
{
    std::vector<fs::path> written;
    std::ostringstream summary;

    if (auto fit = try_read(dir / "poisson_fit.json")) {
        const auto& hist = fit->at("distribution").at("histogram");
        const double n = fit->at("distribution").at("n").get<double>();
        const double mean = fit->at("fit").at("mean").get<double>();
        std::vector<double> k, freq, pmf;
        long k_max = 0;
        for (const auto& item : hist.items())
            k_max = std::max(k_max, std::stol(item.key()));
        double term = std::exp(-mean);
        for (long j = 0; j <= k_max + 1; ++j) {
            k.push_back(static_cast<double>(j));
            const std::string key = std::to_string(j);
            freq.push_back(hist.contains(key) ? hist.at(key).get<double>() / n : 0.0);
            pmf.push_back(term);
            term *= mean / static_cast<double>(j + 1);
        }
        SvgPlot plot("eta_L counts vs Poisson(mean)", "count", "frequency");
        plot.add_series("empirical", k, freq, SvgPlot::Style::Bars);
        plot.add_series("Poisson", k, pmf, SvgPlot::Style::Points);
        save(dir / "histogram.svg", plot.render(), written);
        const auto& f = fit->at("fit");
        summary << "Poisson fit: n=" << f.at("n") << " mean=" << f.at("mean") << " var/mean=" << f.at("dispersion")
                << " TV=" << f.at("tv_distance") << " verdict=" << f.at("verdict").get<std::string>() << "\n";
    }

    if (auto decay = try_read(dir / "decay.json")) {
        SvgPlot plot("fractional moments of the resolvent", "distance |n - m|", "log E|G|^s");
        for (const auto& probe : decay->at("probes")) {
            const auto d = probe.at("distances").get<std::vector<double>>();
            const auto y = probe.at("log_means").get<std::vector<double>>();
            const double c = probe.at("fit").at("log_c").get<double>();
            const double r = probe.at("fit").at("rate").get<double>();
            std::vector<double> line;
            for (double x : d)
                line.push_back(c - r * x);
            const std::string label = "E=" + probe.at("energy").dump();
            plot.add_series(label, d, y, SvgPlot::Style::Points);
            plot.add_error_bars(probe.at("log_std_errors").get<std::vector<double>>());
            plot.add_series(label + " fit", d, line, SvgPlot::Style::Line);
            summary << "decay at " << label << ": rate=" << r << " R^2=" << probe.at("fit").at("r_squared") << "\n";
        }
        save(dir / "decay.svg", plot.render(), written);
        summary << "r_hat=" << decay->at("r_hat") << " gamma_log=" << decay->at("gamma_log")
                << " threshold=" << decay->at("gamma_log_threshold") << "\n";
    }

    if (auto charfn = try_read(dir / "charfn.json")) {
        const auto t = charfn->at("t").get<std::vector<double>>();
        std::vector<double> er, tr;
        for (std::size_t i = 0; i < t.size(); ++i) {
            er.push_back(charfn->at("empirical")[i][0].get<double>());
            tr.push_back(charfn->at("target")[i][0].get<double>());
        }
        SvgPlot plot("characteristic function (real part)", "t", "Re E exp(itN)");
        plot.add_series("empirical", t, er, SvgPlot::Style::Points);
        plot.add_series("Poisson target", t, tr, SvgPlot::Style::Line);
        save(dir / "charfn.svg", plot.render(), written);
        summary << "charfn sup distance=" << charfn->at("sup_distance") << "\n";
    }

    if (fs::exists(dir / "ids.csv")) {
        std::vector<double> e, nu;
        for (const auto& row : read_csv(dir / "ids.csv")) {
            e.push_back(row.at(0));
            nu.push_back(row.at(1));
        }
        SvgPlot plot("integrated density of states", "E", "nu_hat(E)");
        plot.add_series("pooled", e, nu, SvgPlot::Style::Line);
        save(dir / "ids.svg", plot.render(), written);
    }
    if (auto ids = try_read(dir / "ids.json"))
        summary << "D_hat=" << ids->at("D_hat") << " +- " << ids->at("D_error")
                << " target intensity=" << ids->at("target_intensity") << "\n";

    if (auto gap = try_read(dir / "gap.json")) {
        std::vector<double> L, m, se;
        for (const auto& level : gap->at("levels")) {
            L.push_back(level.at("L").get<double>());
            m.push_back(level.at("mean").get<double>());
            se.push_back(level.at("stderr").get<double>());
        }
        SvgPlot plot("mean |xi - eta_L|", "L", "gap");
        plot.add_series("gap", L, m, SvgPlot::Style::Points);
        plot.add_error_bars(se);
        save(dir / "gap.svg", plot.render(), written);
        summary << "gap decreasing=" << gap->at("decreasing") << "\n";
    }

    if (auto rem = try_read(dir / "remainder.json")) {
        std::vector<double> L, audit;
        for (const auto& level : rem->at("levels")) {
            L.push_back(std::log(level.at("L").get<double>()));
            audit.push_back(level.at("audit").get<double>());
        }
        SvgPlot plot("factorial-moment audit", "log L", "|Gamma_L| E[N(N-1)]");
        plot.set_log_y(true);
        plot.add_series("audit", L, audit, SvgPlot::Style::Points);
        save(dir / "remainder.svg", plot.render(), written);
        summary << "remainder slope=" << rem->at("slope") << " predicted=" << rem->at("predicted_slope")
                << " pass=" << rem->at("pass") << "\n";
    }

    if (written.empty())
        throw ConfigError("no reports found in " + dir.string());
    save(dir / "summary.txt", summary.str(), written);
    return written;
}

} // namespace anderson
