#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace calib::svg {

std::string escape(std::string_view text);

// Fixed-point text with `decimals` digits, independent of the C++ locale.
std::string fixed(double v, int decimals = 2);

// Line/scatter chart in data coordinates with linear axes.
class Plot {
public:
    Plot(std::string title, std::string x_label, std::string y_label, double x_min, double x_max, double y_min,
         double y_max, int width = 640, int height = 420);

    void polyline(std::span<const double> xs, std::span<const double> ys, std::string_view color,
                  double stroke_width = 1.5, bool dashed = false);
    void markers(std::span<const double> xs, std::span<const double> ys, std::string_view color, double radius = 3.5);
    // Filled region between y = 0 and the curve over xs.
    void area(std::span<const double> xs, std::span<const double> ys, std::string_view color, double opacity = 0.6);
    void bar(double x0, double x1, double height, std::string_view color, double opacity = 0.7);
    void legend(std::string_view label, std::string_view color);

    std::string str() const;

private:
    double sx(double x) const;
    double sy(double y) const;

    std::string title_, x_label_, y_label_;
    double x_min_, x_max_, y_min_, y_max_;
    int width_, height_;
    std::vector<std::string> body_;
    std::vector<std::pair<std::string, std::string>> legend_;
};

// Qualitative palette indexed modulo its size.
std::string_view palette(std::size_t i);

}  // namespace calib::svg
