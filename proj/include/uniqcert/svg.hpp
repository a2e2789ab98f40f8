#pragma once

// Minimal SVG emitters: a log-scale line plot for singular-value series and
// a two-panel raster heat map for Jacobian maps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "uniqcert/jacobian.hpp"
#include "uniqcert/rank.hpp"

namespace uniqcert::svg {

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Viridis-like ramp sampled at five stops, t in [0, 1].
inline std::string colour(double t) {
    static const double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    if (!std::isfinite(t)) return "#bbbbbb";
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(t));
    const double f = t - i;
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                  static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                  static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
    return buf;
}

// log10 clamped away from zero so empty cells and exact zeros still render.
inline double safe_log10(double v) { return std::log10(std::max(v, 1e-300)); }

}  // namespace detail

// sigma_min against accuracy order on a logarithmic y axis.
inline std::string series_plot(const SingularSpectrumSeries& s, const std::string& title) {
    const double w = 560, h = 380, left = 80, right = 20, top = 40, bottom = 50;
    const double pw = w - left - right, ph = h - top - bottom;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : s.sigma_min) {
        const double l = detail::safe_log10(v);
        lo = std::min(lo, l);
        hi = std::max(hi, l);
    }
    lo = std::floor(lo);
    hi = std::ceil(hi);
    if (hi <= lo) hi = lo + 1;
    const double x0 = s.orders.front(), x1 = s.orders.size() > 1 ? s.orders.back() : x0 + 1;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double l) { return top + (hi - l) / (hi - lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << detail::escape(title) << "</text>\n";
    const int step = std::max(1, static_cast<int>((hi - lo) / 8));
    for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) {
        const double y = py(e);
        o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << detail::num(y) << "\" y2=\"" << detail::num(y)
          << "\" stroke=\"#e0e0e0\"/>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << detail::num(y + 4) << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
    for (unsigned ord : s.orders)
        o << "<text x=\"" << detail::num(px(ord)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << ord
          << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">finite-difference accuracy order</text>\n";
    o << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">smallest singular value</text>\n";
    o << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.orders.size(); ++i)
        o << detail::num(px(s.orders[i])) << "," << detail::num(py(detail::safe_log10(s.sigma_min[i]))) << " ";
    o << "\"/>\n";
    for (std::size_t i = 0; i < s.orders.size(); ++i)
        o << "<circle cx=\"" << detail::num(px(s.orders[i])) << "\" cy=\""
          << detail::num(py(detail::safe_log10(s.sigma_min[i]))) << "\" r=\"3.5\" fill=\"#1f77b4\"/>\n";
    o << "</svg>\n";
    return o.str();
}

// Two panels (low and high order) coloured by log10 sigma_min on a shared
// scale. Only the first two grid axes are drawn; large grids are binned to
// at most `max_cells` cells per axis by averaging log10 values.
inline std::string heatmap(const JacobianMap& m, const std::string& title, std::size_t max_cells = 150) {
    if (m.ambient_dim < 2 || m.size() == 0) {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"60\"><text x=\"10\" y=\"30\">"
               "heat map needs a two-dimensional grid</text></svg>\n";
    }
    std::map<std::size_t, std::size_t> ti, xi;
    for (const auto& idx : m.point_indices) {
        ti.emplace(idx[0], 0);
        xi.emplace(idx[1], 0);
    }
    std::size_t c = 0;
    for (auto& [k, v] : ti) v = c++;
    c = 0;
    for (auto& [k, v] : xi) v = c++;
    const std::size_t nt = ti.size(), nx = xi.size();
    const std::size_t bt = (nt + max_cells - 1) / max_cells, bx = (nx + max_cells - 1) / max_cells;
    const std::size_t ct = (nt + bt - 1) / bt, cx = (nx + bx - 1) / bx;

    auto bin = [&](const std::vector<double>& sig) {
        std::vector<double> sum(ct * cx, 0.0);
        std::vector<std::size_t> n(ct * cx, 0);
        for (std::size_t p = 0; p < m.size(); ++p) {
            const std::size_t r = ti[m.point_indices[p][0]] / bt, q = xi[m.point_indices[p][1]] / bx;
            sum[r * cx + q] += detail::safe_log10(sig[p]);
            ++n[r * cx + q];
        }
        for (std::size_t i = 0; i < sum.size(); ++i)
            sum[i] = n[i] ? sum[i] / static_cast<double>(n[i]) : std::numeric_limits<double>::quiet_NaN();
        return sum;
    };
    const auto low = bin(m.sigma_min_low), high = bin(m.sigma_min_high);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* v : {&low, &high})
        for (double l : *v)
            if (std::isfinite(l)) {
                lo = std::min(lo, l);
                hi = std::max(hi, l);
            }
    if (!(hi > lo)) hi = lo + 1;

    const double panel = 300, gap = 60, left = 60, top = 50, legend_w = 20;
    const double w = left + 2 * panel + gap + 100, h = top + panel + 60;
    const double cw = panel / static_cast<double>(cx), chh = panel / static_cast<double>(ct);
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << detail::escape(title) << "</text>\n";
    const std::string tname = m.axes[0].name, xname = m.axes[1].name;
    for (int pnl = 0; pnl < 2; ++pnl) {
        const auto& vals = pnl == 0 ? low : high;
        const double ox = left + pnl * (panel + gap);
        o << "<text x=\"" << ox + panel / 2 << "\" y=\"" << top - 8 << "\" text-anchor=\"middle\">accuracy "
          << (pnl == 0 ? m.d1 : m.d2) << "</text>\n";
        o << "<g shape-rendering=\"crispEdges\">\n";
        for (std::size_t r = 0; r < ct; ++r)
            for (std::size_t q = 0; q < cx; ++q) {
                const double l = vals[r * cx + q];
                // time increases upwards
                o << "<rect x=\"" << detail::num(ox + q * cw) << "\" y=\"" << detail::num(top + (ct - 1 - r) * chh)
                  << "\" width=\"" << detail::num(cw + 0.3) << "\" height=\"" << detail::num(chh + 0.3) << "\" fill=\""
                  << detail::colour((l - lo) / (hi - lo)) << "\"/>\n";
            }
        o << "</g>\n";
        o << "<rect x=\"" << ox << "\" y=\"" << top << "\" width=\"" << panel << "\" height=\"" << panel
          << "\" fill=\"none\" stroke=\"black\"/>\n";
        o << "<text x=\"" << ox + panel / 2 << "\" y=\"" << top + panel + 20 << "\" text-anchor=\"middle\">" << xname
          << "</text>\n";
        o << "<text x=\"" << ox - 10 << "\" y=\"" << top + panel / 2 << "\" text-anchor=\"end\">" << tname << "</text>\n";
    }
    const double lx = left + 2 * panel + gap - 30;
    for (int i = 0; i < 50; ++i) {
        const double f = i / 49.0;
        o << "<rect x=\"" << lx << "\" y=\"" << detail::num(top + (1 - f) * panel - panel / 50) << "\" width=\"" << legend_w
          << "\" height=\"" << detail::num(panel / 50 + 0.5) << "\" fill=\"" << detail::colour(f) << "\"/>\n";
    }
    o << "<text x=\"" << lx + legend_w + 4 << "\" y=\"" << top + 10 << "\">1e" << detail::num(hi) << "</text>\n";
    o << "<text x=\"" << lx + legend_w + 4 << "\" y=\"" << top + panel << "\">1e" << detail::num(lo) << "</text>\n";
    o << "<text x=\"" << lx << "\" y=\"" << top + panel + 40 << "\">log10 sigma_min</text>\n";
    o << "</svg>\n";
    return o.str();
}

}  // namespace uniqcert::svg
