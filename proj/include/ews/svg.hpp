#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ews/indicators.hpp"

namespace ews {

namespace detail {

inline std::string fnum(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace detail

/// Four stacked line panels (return rate, lag-1 autocorrelation, CV, skewness)
/// over sub-window center time. Null samples break the polyline. Pure text
/// output, deterministic for identical input.
inline void write_indicator_svg(std::span<const IndicatorSample> traj, std::ostream& out,
                                const std::string& title = "") {
    constexpr int W = 640, panel_h = 120, pad = 46, gap = 14, top = 28;
    const int H = top + 4 * (panel_h + gap);

    struct Panel {
        const char* name;
        IndicatorValue IndicatorSample::* member;
    };
    const Panel panels[] = {
        {"return rate", &IndicatorSample::return_rate},
        {"lag-1 autocorrelation", &IndicatorSample::ac1},
        {"coefficient of variation", &IndicatorSample::cv},
        {"skewness", &IndicatorSample::skewness},
    };

    double t0 = traj.empty() ? 0.0 : traj.front().t_mid;
    double t1 = traj.empty() ? 1.0 : traj.back().t_mid;
    if (t1 <= t0) t1 = t0 + 1.0;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty())
        out << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\" "
               "font-family=\"sans-serif\">" << title << "</text>\n";

    for (int pi = 0; pi < 4; ++pi) {
        const auto& p = panels[pi];
        int y0 = top + pi * (panel_h + gap);

        double lo = 1e300, hi = -1e300;
        for (const auto& s : traj)
            if ((s.*p.member).has_value()) {
                lo = std::min(lo, *(s.*p.member));
                hi = std::max(hi, *(s.*p.member));
            }
        bool any = lo <= hi;
        if (!any) { lo = 0.0; hi = 1.0; }
        if (hi - lo < 1e-12) { lo -= 0.5; hi += 0.5; }
        double margin = 0.06 * (hi - lo);
        lo -= margin;
        hi += margin;

        auto sx = [&](double t) { return pad + (t - t0) / (t1 - t0) * (W - pad - 12); };
        auto sy = [&](double v) { return y0 + panel_h - (v - lo) / (hi - lo) * panel_h; };

        out << "<rect x=\"" << pad << "\" y=\"" << y0 << "\" width=\"" << (W - pad - 12)
            << "\" height=\"" << panel_h << "\" fill=\"none\" stroke=\"#ccc\"/>\n";
        out << "<text x=\"" << pad + 4 << "\" y=\"" << y0 + 13
            << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\"#444\">" << p.name
            << "</text>\n";
        out << "<text x=\"" << pad - 4 << "\" y=\"" << y0 + 10
            << "\" text-anchor=\"end\" font-size=\"9\" font-family=\"sans-serif\" fill=\"#888\">"
            << detail::fnum(hi) << "</text>\n";
        out << "<text x=\"" << pad - 4 << "\" y=\"" << y0 + panel_h
            << "\" text-anchor=\"end\" font-size=\"9\" font-family=\"sans-serif\" fill=\"#888\">"
            << detail::fnum(lo) << "</text>\n";

        if (any) {
            std::string path;
            bool pen_down = false;
            for (const auto& s : traj) {
                const auto& v = s.*p.member;
                if (!v.has_value()) {
                    pen_down = false;
                    continue;
                }
                path += pen_down ? " L" : " M";
                path += detail::fnum(sx(s.t_mid)) + "," + detail::fnum(sy(*v));
                pen_down = true;
            }
            out << "<path d=\"" << path
                << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.2\"/>\n";
        }
    }

    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 2
        << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\" fill=\"#666\">"
           "sub-window center time, " << detail::fnum(t0) << " s to " << detail::fnum(t1)
        << " s</text>\n";
    out << "</svg>\n";
}

}  // namespace ews
