#pragma once

#include <filesystem>

#include "wvar/risk.hpp"
#include "wvar/segmentation.hpp"
#include "wvar/series.hpp"

namespace wvar::svg {

/// Linear value -> pixel map. Exposed so tests can invert emitted
/// coordinates.
struct LinearAxis {
  double v0 = 0.0, v1 = 1.0;  // value range
  double p0 = 0.0, p1 = 1.0;  // pixel range
  double to_pixel(double v) const;
};

struct Layout {
  double width = 960.0;
  double height = 640.0;
  double margin_left = 64.0;
  double margin_right = 16.0;
  double margin_top = 28.0;
  double margin_bottom = 40.0;
  double panel_gap = 44.0;
};

/// Deterministic axis construction from the data; the returns panel range
/// includes the negated risk lines.
struct FigureGeometry {
  Layout layout;
  LinearAxis price_x, price_y;
  LinearAxis return_x, return_y;
};

FigureGeometry figure_geometry(const PriceSeries& prices, const ReturnSeries& returns,
                               const RiskReport& report, const Layout& layout = {});

/// Two panels: prices with one vertical marker per breakpoint (class
/// "cp-marker"), returns with horizontal lines at -var/-wvar/-bvar (classes
/// "risk-var", "risk-wvar", "risk-bvar").
void emit_svg(const std::filesystem::path& path, const PriceSeries& prices,
              const ReturnSeries& returns, const Segmentation& seg, const RiskReport& report);

}  // namespace wvar::svg
