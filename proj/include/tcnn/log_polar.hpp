#pragma once

#include <cmath>
#include <stdexcept>

#include "tcnn/image.hpp"

namespace tcnn {

// Geometry of the bore-to-strip unwrap. Rows follow log-spaced radii
// r_i = r_min * (r_max/r_min)^(i/(R-1)), columns follow angles 2*pi*j/A.
struct UnfoldGeometry {
    double center_x = 0.0, center_y = 0.0;
    double r_min = 0.0, r_max = 0.0;
    std::size_t radial = 94;    // output rows
    std::size_t angular = 768;  // output columns
};

// Center of the pixel grid, r_max = largest inscribed radius, r_min at 10%.
inline UnfoldGeometry default_geometry(const GrayImage& img, std::size_t radial = 94, std::size_t angular = 768) {
    UnfoldGeometry g;
    g.center_x = 0.5 * static_cast<double>(img.width - 1);
    g.center_y = 0.5 * static_cast<double>(img.height - 1);
    g.r_max = std::min(std::min(g.center_x, g.center_y),
                       std::min(static_cast<double>(img.width - 1) - g.center_x,
                                static_cast<double>(img.height - 1) - g.center_y));
    g.r_min = 0.1 * g.r_max;
    g.radial = radial;
    g.angular = angular;
    return g;
}

inline GrayImage unfold_log_polar(const GrayImage& img, const UnfoldGeometry& geom) {
    if (!img.valid()) throw std::invalid_argument("unfold: empty image");
    if (geom.r_min <= 0.0) throw std::invalid_argument("unfold: r_min must be positive");
    if (geom.r_max <= geom.r_min) throw std::invalid_argument("unfold: r_max must exceed r_min");
    if (geom.radial < 2 || geom.angular < 1) throw std::invalid_argument("unfold: need >= 2 radii and >= 1 angle");
    if (geom.center_x < 0.0 || geom.center_y < 0.0 || geom.center_x > static_cast<double>(img.width - 1) ||
        geom.center_y > static_cast<double>(img.height - 1))
        throw std::invalid_argument("unfold: center outside the image");

    const double two_pi = 6.283185307179586476925286766559;
    const double ratio = geom.r_max / geom.r_min;
    GrayImage out(geom.angular, geom.radial);
    for (std::size_t i = 0; i < geom.radial; ++i) {
        const double r = geom.r_min * std::pow(ratio, static_cast<double>(i) / static_cast<double>(geom.radial - 1));
        for (std::size_t j = 0; j < geom.angular; ++j) {
            const double theta = two_pi * static_cast<double>(j) / static_cast<double>(geom.angular);
            const double x = geom.center_x + r * std::cos(theta);
            const double y = geom.center_y + r * std::sin(theta);
            out.at(i, j) = bilinear_sample(img, x, y);
        }
    }
    return out;
}

}  // namespace tcnn
