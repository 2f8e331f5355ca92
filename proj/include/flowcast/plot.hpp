#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowcast/calendar.hpp"
#include "flowcast/harness.hpp"

namespace flowcast {

/// Renders ground truth plus one line per model for a single POI over an
/// hour range as a standalone SVG. The y axis starts at zero.
inline void plot_series(std::span<const PredictionRecord> records, std::size_t poi,
                        HourIndex from_hour, HourIndex to_hour, const std::string& path) {
    if (to_hour <= from_hour) throw std::invalid_argument("plot_series: empty time range");

    std::map<HourIndex, double> truth;
    std::map<std::string, std::map<HourIndex, double>> by_model;
    bool poi_seen = false;
    for (const auto& r : records) {
        if (r.poi != poi) continue;
        poi_seen = true;
        if (r.hour < from_hour || r.hour >= to_hour) continue;
        truth[r.hour] = r.y_true;
        by_model[r.model][r.hour] = r.y_pred;
    }
    if (!poi_seen) {
        throw std::invalid_argument("plot_series: poi " + std::to_string(poi) +
                                    " not present in predictions");
    }
    if (truth.empty()) {
        throw std::invalid_argument("plot_series: no predictions in requested range");
    }

    double y_max = 1.0;
    for (const auto& [h, v] : truth) y_max = std::max(y_max, v);
    for (const auto& [m, series] : by_model) {
        for (const auto& [h, v] : series) y_max = std::max(y_max, v);
    }
    y_max *= 1.05;

    const double width = 960, height = 420;
    const double ml = 60, mr = 180, mt = 30, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;
    const double span = static_cast<double>(to_hour - from_hour);
    auto sx = [&](HourIndex h) { return ml + pw * (static_cast<double>(h - from_hour) / span); };
    auto sy = [&](double v) { return mt + ph * (1.0 - v / y_max); };

    const std::vector<std::string> palette = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = y_max * i / 4.0;
        svg << "<text x=\"" << ml - 8 << "\" y=\"" << sy(v) + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << static_cast<int>(v) << "</text>\n";
    }
    const int n_ticks = 6;
    for (int i = 0; i <= n_ticks; ++i) {
        const HourIndex h = from_hour + static_cast<HourIndex>(span * i / n_ticks);
        svg << "<text x=\"" << sx(h) << "\" y=\"" << mt + ph + 18
            << "\" font-size=\"10\" text-anchor=\"middle\">" << format_hour(h) << "</text>\n";
    }
    svg << "<text x=\"" << ml - 44 << "\" y=\"" << mt + ph / 2
        << "\" font-size=\"11\" transform=\"rotate(-90 " << ml - 44 << " " << mt + ph / 2
        << ")\" text-anchor=\"middle\">visitors</text>\n";

    auto polyline = [&](const std::map<HourIndex, double>& series, const std::string& color,
                        double stroke) {
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << stroke
            << "\" points=\"";
        for (const auto& [h, v] : series) svg << sx(h) << ',' << sy(std::max(0.0, v)) << ' ';
        svg << "\"/>\n";
    };
    polyline(truth, "black", 1.6);
    std::size_t ci = 0;
    for (const auto& [model, series] : by_model) {
        polyline(series, palette[ci % palette.size()], 1.2);
        ++ci;
    }

    // legend
    double ly = mt + 10;
    auto legend_item = [&](const std::string& label, const std::string& color) {
        svg << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 36
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << ml + pw + 42 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
            << label << "</text>\n";
        ly += 18;
    };
    legend_item("truth", "black");
    ci = 0;
    for (const auto& [model, series] : by_model) {
        legend_item(model, palette[ci % palette.size()]);
        ++ci;
    }
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << svg.str();
}

}  // namespace flowcast
