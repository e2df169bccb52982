#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "skelxai/attribution.hpp"
#include "skelxai/metrics.hpp"
#include "skelxai/skeleton.hpp"
#include "skelxai/stats.hpp"

namespace skelxai {

// Attribution score -> color bands relative to a base threshold t:
// green < 0.3t <= yellow < 0.6t <= orange < t <= red.
struct ColorRule {
    double threshold = 0.3;

    std::string color_for(double score) const;
    std::string band_for(double score) const;  // "green" | "yellow" | "orange" | "red"
};

class SvgWriter {
public:
    SvgWriter(int width, int height);

    void comment(const std::string& text);
    void open_group(const std::string& attrs);
    void close_group();
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0);
    void circle(double cx, double cy, double r, const std::string& fill,
                const std::string& stroke = "");
    void rect(double x, double y, double w, double h, const std::string& fill);
    void text(double x, double y, const std::string& s, const std::string& anchor = "start",
              int size = 12, const std::string& fill = "#000");

    std::string str() const;  // complete document
    void save(const std::string& path) const;

private:
    int width_, height_;
    std::ostringstream body_;
};

struct MethodStat {
    Method method;
    double mean = 0.0;
    double stdev = 0.0;
};

struct PanelData {
    MetricKind metric;
    std::string direction;  // e.g. "higher is better"
    bool log_scale = false;
    std::vector<MethodStat> stats;
    std::optional<TTestResult> cam_vs_gradcam;
};

// One panel per metric; methods on distinct horizontal lines with mean +/- std
// intervals, log-scaled value axis where requested, and the CAM-vs-Grad-CAM
// p-value in the panel corner.
void render_metric_panels(const std::string& path, const std::vector<PanelData>& panels,
                          const std::string& provenance);

// One frame of a window with bones as lines and joints colored by the rule.
void render_skeleton_svg(const std::string& path, const Window& w, int frame,
                         const JointRegistry& reg, const AttributionMap& map,
                         const ColorRule& rule, const std::string& provenance);

}  // namespace skelxai
