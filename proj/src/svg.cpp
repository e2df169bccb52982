#include "skelxai/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace skelxai {

std::string ColorRule::band_for(double score) const {
    if (score < 0.3 * threshold) return "green";
    if (score < 0.6 * threshold) return "yellow";
    if (score < threshold) return "orange";
    return "red";
}

std::string ColorRule::color_for(double score) const {
    const std::string band = band_for(score);
    if (band == "green") return "#3cb44b";
    if (band == "yellow") return "#ffe119";
    if (band == "orange") return "#f58231";
    return "#e6194b";
}

SvgWriter::SvgWriter(int width, int height) : width_(width), height_(height) {}

void SvgWriter::comment(const std::string& text) { body_ << "<!-- " << text << " -->\n"; }

void SvgWriter::open_group(const std::string& attrs) { body_ << "<g " << attrs << ">\n"; }

void SvgWriter::close_group() { body_ << "</g>\n"; }

void SvgWriter::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                     double width) {
    body_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
          << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\" />\n";
}

void SvgWriter::circle(double cx, double cy, double r, const std::string& fill,
                       const std::string& stroke) {
    body_ << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << r << "\" fill=\"" << fill
          << "\"";
    if (!stroke.empty()) body_ << " stroke=\"" << stroke << "\"";
    body_ << " />\n";
}

void SvgWriter::rect(double x, double y, double w, double h, const std::string& fill) {
    body_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
          << "\" fill=\"" << fill << "\" />\n";
}

void SvgWriter::text(double x, double y, const std::string& s, const std::string& anchor, int size,
                     const std::string& fill) {
    body_ << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor
          << "\" font-family=\"sans-serif\" font-size=\"" << size << "\" fill=\"" << fill << "\">"
          << s << "</text>\n";
}

std::string SvgWriter::str() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
        << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << width_ << "\" height=\"" << height_
        << "\" fill=\"white\" />\n";
    out << body_.str();
    out << "</svg>\n";
    return out.str();
}

void SvgWriter::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write svg file: " + path);
    out << str();
}

namespace {

std::string method_color(Method m) {
    switch (m) {
        case Method::cam: return "#4363d8";
        case Method::gradcam: return "#3cb44b";
        case Method::random: return "#e6194b";
    }
    return "#000";
}

std::string short_value(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

}  // namespace

void render_metric_panels(const std::string& path, const std::vector<PanelData>& panels,
                          const std::string& provenance) {
    const int panel_w = 360, panel_h = 130, margin = 16;
    const int cols = 2;
    const int rows = (static_cast<int>(panels.size()) + cols - 1) / cols;
    const int W = cols * panel_w + (cols + 1) * margin;
    const int H = rows * panel_h + (rows + 1) * margin + 24;

    SvgWriter svg(W, H);
    svg.comment(provenance);

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const PanelData& p = panels[pi];
        const int col = static_cast<int>(pi) % cols;
        const int row = static_cast<int>(pi) / cols;
        const double x0 = margin + col * (panel_w + margin);
        const double y0 = margin + row * (panel_h + margin);

        svg.open_group("data-metric=\"" + to_string(p.metric) + "\" data-scale=\"" +
                       (p.log_scale ? std::string("log") : std::string("linear")) + "\"");
        svg.rect(x0, y0, panel_w, panel_h, "#f7f7f7");
        svg.text(x0 + 8, y0 + 16, to_string(p.metric) + "  (" + p.direction + ")", "start", 13);

        // value axis range across methods
        const double pad_l = 90, pad_r = 14;
        const double axis_y = y0 + panel_h - 18;
        double lo = 0.0, hi = 1.0;
        bool first = true;
        for (const auto& s : p.stats) {
            double a = s.mean - s.stdev, b = s.mean + s.stdev;
            if (p.log_scale) {
                a = std::max(a, 1e-12);
                b = std::max(b, 1e-12);
                a = std::log10(a);
                b = std::log10(b);
            }
            lo = first ? a : std::min(lo, a);
            hi = first ? b : std::max(hi, b);
            first = false;
        }
        if (hi <= lo) hi = lo + 1.0;
        const double span = hi - lo;
        lo -= 0.05 * span;
        hi += 0.05 * span;
        auto map_x = [&](double v) {
            double t = p.log_scale ? std::log10(std::max(v, 1e-12)) : v;
            return x0 + pad_l + (t - lo) / (hi - lo) * (panel_w - pad_l - pad_r);
        };

        svg.line(x0 + pad_l, axis_y, x0 + panel_w - pad_r, axis_y, "#999", 1.0);
        svg.text(x0 + pad_l, axis_y + 14,
                 p.log_scale ? "AUC (log scale)" : "AUC", "start", 10, "#666");

        double row_y = y0 + 38;
        for (const auto& s : p.stats) {
            const std::string color = method_color(s.method);
            const double xa = map_x(p.log_scale ? std::max(s.mean - s.stdev, 1e-12)
                                                : s.mean - s.stdev);
            const double xb = map_x(p.log_scale ? std::max(s.mean + s.stdev, 1e-12)
                                                : s.mean + s.stdev);
            svg.text(x0 + 8, row_y + 4, to_string(s.method), "start", 11);
            svg.line(xa, row_y, xb, row_y, color, 2.0);
            svg.line(xa, row_y - 4, xa, row_y + 4, color, 1.5);
            svg.line(xb, row_y - 4, xb, row_y + 4, color, 1.5);
            svg.circle(map_x(s.mean), row_y, 3.5, color);
            svg.text(x0 + panel_w - pad_r, row_y + 4, short_value(s.mean), "end", 9, "#555");
            row_y += 22;
        }

        if (p.cam_vs_gradcam) {
            std::ostringstream note;
            note << "cam vs gradcam p=" << short_value(p.cam_vs_gradcam->p_value);
            if (p.cam_vs_gradcam->degenerate) note << " (degenerate)";
            svg.text(x0 + panel_w - 8, y0 + 16, note.str(), "end", 10, "#333");
        }
        svg.close_group();
    }
    svg.save(path);
}

void render_skeleton_svg(const std::string& path, const Window& w, int frame,
                         const JointRegistry& reg, const AttributionMap& map,
                         const ColorRule& rule, const std::string& provenance) {
    if (frame < 0 || frame >= w.frames()) throw ConfigError("frame index out of range");
    if (static_cast<int>(map.scores.size()) != w.joints)
        throw ShapeMismatch("attribution does not cover the joint set");

    const int W = 420, H = 460;
    double min_x = w.x(frame, 0), max_x = min_x, min_y = w.y(frame, 0), max_y = min_y;
    for (int j = 0; j < w.joints; ++j) {
        min_x = std::min(min_x, w.x(frame, j));
        max_x = std::max(max_x, w.x(frame, j));
        min_y = std::min(min_y, w.y(frame, j));
        max_y = std::max(max_y, w.y(frame, j));
    }
    const double pad = 40.0;
    const double sx = (W - 2 * pad) / std::max(max_x - min_x, 1.0);
    const double sy = (H - 2 * pad - 40) / std::max(max_y - min_y, 1.0);
    const double s = std::min(sx, sy);
    auto px = [&](int j) { return pad + (w.x(frame, j) - min_x) * s; };
    auto py = [&](int j) { return pad + 20 + (w.y(frame, j) - min_y) * s; };

    SvgWriter svg(W, H);
    svg.comment(provenance);
    svg.text(10, 18, map.window_id + "  [" + to_string(map.method) + "]", "start", 12);

    for (auto [p, c] : reg.bones) svg.line(px(p), py(p), px(c), py(c), "#9aa0a6", 2.0);
    for (int j = 0; j < w.joints; ++j) {
        svg.open_group("data-joint=\"" + reg.names[j] + "\" data-band=\"" +
                       rule.band_for(map.scores[j]) + "\"");
        svg.circle(px(j), py(j), 6.0, rule.color_for(map.scores[j]), "#444");
        svg.close_group();
    }

    // legend
    const char* bands[4] = {"green", "yellow", "orange", "red"};
    const double samples[4] = {0.0, 0.35 * rule.threshold, 0.75 * rule.threshold,
                               rule.threshold};
    double lx = 10;
    const double ly = H - 14;
    for (int i = 0; i < 4; ++i) {
        svg.circle(lx, ly - 4, 5.0, rule.color_for(samples[i]));
        svg.text(lx + 10, ly, bands[i], "start", 10, "#333");
        lx += 70;
    }
    svg.save(path);
}

}  // namespace skelxai
