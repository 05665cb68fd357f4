#pragma once

// File formats: CSV tables and field/profile snapshots with 17-digit
// decimal floats, JSON sidecars, and minimal hand-emitted SVG line plots.
// All text output is UTF-8 with LF line endings.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "axisym.hpp"
#include "profile.hpp"
#include "qtensor.hpp"
#include "trial.hpp"

#include "json.hpp"

namespace nematic {

using json = nlohmann::json;

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// Profile dump: one row per node, plus a JSON sidecar next to it.
inline void write_profile_csv(const std::filesystem::path& path, const ProfileGrid& grid,
                              const ProfileResult& result, double theta, double lambda) {
    std::string s = "t,q1,q2,q3,q4,q5\n";
    for (int k = 0; k < grid.n; ++k) {
        s += fmt17(grid.t(k));
        for (int i = 0; i < 5; ++i) s += "," + fmt17(result.values[static_cast<size_t>(k)][i]);
        s += "\n";
    }
    write_text_file(path, s);
    json side = {{"theta", theta},
                 {"lambda", lambda},
                 {"L", grid.length},
                 {"N", grid.n},
                 {"energy", result.energy}};
    write_json_file(std::filesystem::path(path).replace_extension(".json"), side);
}

// Field snapshot: r,theta,q1..q5 rows over the grid.
inline void write_field_csv(const std::filesystem::path& path, const AxiGrid& grid,
                            const AxiField& field) {
    std::string s = "r,theta,q1,q2,q3,q4,q5\n";
    for (int i = 0; i < grid.nr(); ++i)
        for (int j = 0; j < grid.nth(); ++j) {
            s += fmt17(grid.r[static_cast<size_t>(i)]) + "," +
                 fmt17(grid.theta[static_cast<size_t>(j)]);
            for (int k = 0; k < 5; ++k) s += "," + fmt17(field.at(i, j)[k]);
            s += "\n";
        }
    write_text_file(path, s);
}

inline void write_field_sidecar(const std::filesystem::path& path, const ModelParams& p,
                                const EnergyBreakdown& b, const ConvergenceRecord& rec) {
    json side = {{"xi", p.xi},
                 {"eta", p.eta},
                 {"lambda", p.lambda()},
                 {"reg_delta", p.reg_delta},
                 {"energy",
                  {{"total", b.total()},
                   {"elastic", b.elastic},
                   {"nematic", b.nematic},
                   {"field", b.field},
                   {"upper", b.upper()},
                   {"lower", b.lower()}}},
                 {"convergence",
                  {{"converged", rec.converged},
                   {"iterations", rec.iterations},
                   {"grad_inf_norm", rec.grad_inf_norm},
                   {"status", rec.status},
                   {"init", rec.init_name}}}};
    write_json_file(path, side);
}

// Vortex-core patch dump: one row per (s, tau) node.
inline void write_patch_csv(const std::filesystem::path& path, const SquarePatch& patch) {
    std::string s = "s,tau,u1,u2\n";
    for (int a = 0; a < patch.n; ++a)
        for (int b = 0; b < patch.n; ++b) {
            const std::complex<double> u = patch.at(a, b);
            s += fmt17(patch.s_of(a)) + "," + fmt17(patch.tau_of(b)) + "," +
                 fmt17(u.real()) + "," + fmt17(u.imag()) + "\n";
        }
    write_text_file(path, s);
}

struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
};

// Static line plot: axes, one polyline per series, text labels. No
// plotting dependency; viewers only need basic SVG.
inline std::string svg_line_plot(const std::string& title, const std::string& x_label,
                                 const std::string& y_label,
                                 const std::vector<SvgSeries>& series) {
    const int width = 640, height = 440;
    const double ml = 70, mr = 20, mt = 40, mb = 50;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    bool first = true;
    for (const auto& s : series)
        for (size_t k = 0; k < s.x.size(); ++k) {
            if (first) {
                x_min = x_max = s.x[k];
                y_min = y_max = s.y[k];
                first = false;
            }
            x_min = std::min(x_min, s.x[k]);
            x_max = std::max(x_max, s.x[k]);
            y_min = std::min(y_min, s.y[k]);
            y_max = std::max(y_max, s.y[k]);
        }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr); };
    auto py = [&](double y) {
        return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
    };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + std::to_string(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
    // axes
    s += "<line x1=\"" + fmt17(ml) + "\" y1=\"" + fmt17(height - mb) + "\" x2=\"" +
         fmt17(static_cast<double>(width - mr)) + "\" y2=\"" + fmt17(height - mb) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + fmt17(ml) + "\" y1=\"" + fmt17(mt) + "\" x2=\"" + fmt17(ml) +
         "\" y2=\"" + fmt17(height - mb) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + std::to_string(width / 2) + "\" y=\"" + std::to_string(height - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + x_label +
         "</text>\n";
    s += "<text x=\"18\" y=\"" + std::to_string(height / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 18 " + std::to_string(height / 2) + ")\">" + y_label +
         "</text>\n";
    // range labels
    s += "<text x=\"" + fmt17(ml) + "\" y=\"" + std::to_string(height - mb + 16) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + fmt17(x_min) + "</text>\n";
    s += "<text x=\"" + fmt17(static_cast<double>(width - mr)) + "\" y=\"" +
         std::to_string(height - mb + 16) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fmt17(x_max) +
         "</text>\n";
    s += "<text x=\"" + fmt17(ml - 4) + "\" y=\"" + fmt17(height - mb) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fmt17(y_min) +
         "</text>\n";
    s += "<text x=\"" + fmt17(ml - 4) + "\" y=\"" + fmt17(mt + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fmt17(y_max) +
         "</text>\n";

    int ci = 0;
    for (const auto& sr : series) {
        std::string pts;
        for (size_t k = 0; k < sr.x.size(); ++k) {
            if (k) pts += " ";
            pts += fmt17(px(sr.x[k])) + "," + fmt17(py(sr.y[k]));
        }
        const char* color = colors[ci % 5];
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" "
             "points=\"" + pts + "\"/>\n";
        s += "<text x=\"" + std::to_string(width - mr - 4) + "\" y=\"" +
             std::to_string(mt + 14 + 14 * ci) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" +
             color + "\">" + sr.label + "</text>\n";
        ++ci;
    }
    s += "</svg>\n";
    return s;
}

}  // namespace nematic
