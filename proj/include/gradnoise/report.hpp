#pragma once

#include "error.hpp"
#include "projection.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gradnoise {

/// Shortest-roundtrip-ish fixed formatting shared by every CSV writer, so
/// reruns are byte-identical.
inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline void to_json(nlohmann::json& j, const ProjectionReport& r) {
    j = nlohmann::json{{"iteration", r.iteration},
                       {"sw_mean_p", r.sw_mean_p},
                       {"ad_accept_frac", r.ad_accept_frac},
                       {"baseline_sw_mean_p", r.baseline_sw_mean_p},
                       {"baseline_ad_accept_frac", r.baseline_ad_accept_frac},
                       {"level", r.level},
                       {"directions", r.directions},
                       {"n_degenerate", r.n_degenerate},
                       {"min_sw_p", r.min_sw_p},
                       {"gaussian_rejected", r.gaussian_rejected}};
}

inline void from_json(const nlohmann::json& j, ProjectionReport& r) {
    j.at("iteration").get_to(r.iteration);
    j.at("sw_mean_p").get_to(r.sw_mean_p);
    j.at("ad_accept_frac").get_to(r.ad_accept_frac);
    j.at("baseline_sw_mean_p").get_to(r.baseline_sw_mean_p);
    j.at("baseline_ad_accept_frac").get_to(r.baseline_ad_accept_frac);
    j.at("level").get_to(r.level);
    j.at("directions").get_to(r.directions);
    j.at("n_degenerate").get_to(r.n_degenerate);
    j.at("min_sw_p").get_to(r.min_sw_p);
    j.at("gaussian_rejected").get_to(r.gaussian_rejected);
}

// CSV schemas. Columns never change order; new columns go at the end.
inline constexpr const char* report_csv_header =
    "iteration,sw_mean_p,ad_accept_frac,baseline_sw_mean_p,baseline_ad_accept_frac,n_degenerate";
inline constexpr const char* sweep_csv_header =
    "alpha,sw_mean_p,ad_accept_frac,baseline_sw_mean_p,baseline_ad_accept_frac,n_degenerate";

namespace detail {

inline std::string report_tail(const ProjectionReport& r) {
    return format_number(r.sw_mean_p) + "," + format_number(r.ad_accept_frac) + "," +
           format_number(r.baseline_sw_mean_p) + "," + format_number(r.baseline_ad_accept_frac) + "," +
           std::to_string(r.n_degenerate);
}

}  // namespace detail

inline std::string reports_csv(const std::vector<ProjectionReport>& reports) {
    std::string out = std::string(report_csv_header) + "\n";
    for (const auto& r : reports) out += std::to_string(r.iteration) + "," + detail::report_tail(r) + "\n";
    return out;
}

inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::string out = std::string(sweep_csv_header) + "\n";
    for (const auto& pt : points) out += format_number(pt.alpha) + "," + detail::report_tail(pt.report) + "\n";
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path.string());
}

/// One line chart.
struct FigureSpec {
    struct Series {
        std::string name;
        std::vector<double> y;
    };

    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;
    std::vector<Series> series;
    /// Fixed y axis; when set every y value must lie inside it.
    std::optional<std::pair<double, double>> y_range;

    void validate() const {
        require(!x.empty(), ErrorKind::parameter, "figure has no x values");
        for (const auto& s : series) {
            require(s.y.size() == x.size(), ErrorKind::parameter, "figure series '" + s.name + "' length differs from x");
            for (double v : s.y) {
                require(std::isfinite(v), ErrorKind::parameter, "figure series '" + s.name + "' has a non-finite value");
                if (y_range)
                    require(v >= y_range->first && v <= y_range->second, ErrorKind::parameter,
                            "figure series '" + s.name + "' leaves the fixed y range");
            }
        }
    }
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

inline std::string render_svg(const FigureSpec& fig) {
    fig.validate();
    constexpr double width = 640, height = 400;
    constexpr double left = 60, right = 160, top = 40, bottom = 50;
    constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    const auto [xmin_it, xmax_it] = std::minmax_element(fig.x.begin(), fig.x.end());
    double x0 = *xmin_it, x1 = *xmax_it;
    if (x1 == x0) x1 = x0 + 1.0;
    double y0 = 0.0, y1 = 1.0;
    if (fig.y_range) {
        std::tie(y0, y1) = *fig.y_range;
    } else {
        y0 = std::numeric_limits<double>::infinity();
        y1 = -y0;
        for (const auto& s : fig.series)
            for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
        if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
    }
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * plot_w; };
    auto py = [&](double v) { return top + (1.0 - (v - y0) / (y1 - y0)) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << detail::xml_escape(fig.title) << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + (x1 - x0) * t / 4.0;
        const double yv = y0 + (y1 - y0) * t / 4.0;
        svg << "<text x=\"" << px(xv) << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
            << format_number(xv) << "</text>\n";
        svg << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << format_number(yv)
            << "</text>\n";
    }
    svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
        << detail::xml_escape(fig.x_label) << "</text>\n";
    svg << "<text transform=\"translate(16," << top + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << detail::xml_escape(fig.y_label) << "</text>\n";
    for (std::size_t s = 0; s < fig.series.size(); ++s) {
        const char* color = palette[s % std::size(palette)];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < fig.x.size(); ++i) svg << (i ? " " : "") << px(fig.x[i]) << "," << py(fig.series[s].y[i]);
        svg << "\"/>\n";
        for (std::size_t i = 0; i < fig.x.size(); ++i)
            svg << "<circle cx=\"" << px(fig.x[i]) << "\" cy=\"" << py(fig.series[s].y[i]) << "\" r=\"3\" fill=\""
                << color << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(s);
        svg << "<line x1=\"" << width - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << width - right + 30
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << width - right + 36 << "\" y=\"" << ly + 4 << "\">"
            << detail::xml_escape(fig.series[s].name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

/// The four battery aggregates against x (iteration or alpha).
inline FigureSpec aggregates_figure(std::string title, std::string x_label, std::vector<double> x,
                                    const std::vector<ProjectionReport>& reports) {
    FigureSpec fig;
    fig.title = std::move(title);
    fig.x_label = std::move(x_label);
    fig.y_label = "p-value / acceptance fraction";
    fig.x = std::move(x);
    fig.y_range = std::pair{0.0, 1.0};
    FigureSpec::Series sw{"SW mean p", {}}, ad{"AD accepted", {}}, bsw{"Gaussian SW mean p", {}},
        bad{"Gaussian AD accepted", {}};
    for (const auto& r : reports) {
        sw.y.push_back(r.sw_mean_p);
        ad.y.push_back(r.ad_accept_frac);
        bsw.y.push_back(r.baseline_sw_mean_p);
        bad.y.push_back(r.baseline_ad_accept_frac);
    }
    fig.series = {std::move(sw), std::move(ad), std::move(bsw), std::move(bad)};
    return fig;
}

}  // namespace gradnoise
