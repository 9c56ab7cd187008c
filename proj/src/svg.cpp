#include "calibopt/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace calib::svg {

namespace {
constexpr double kLeft = 64.0, kRight = 20.0, kTop = 36.0, kBottom = 48.0;

// 1, 2 or 5 times a power of ten, giving roughly six ticks.
double tick_step(double span) {
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double f : {1.0, 2.0, 5.0})
        if (raw <= f * mag) return f * mag;
    return 10.0 * mag;
}
}  // namespace

std::string escape(std::string_view text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

std::string fixed(double v, int decimals) {
    if (v == 0.0) v = 0.0;  // drop negative zero
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, decimals);
    std::string s(buf.data(), res.ptr);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

std::string_view palette(std::size_t i) {
    static constexpr std::array<std::string_view, 8> colors = {"#1b6ca8", "#d1495b", "#2e933c", "#edae49",
                                                              "#7b4b94", "#00798c", "#6c757d", "#8f2d56"};
    return colors[i % colors.size()];
}

Plot::Plot(std::string title, std::string x_label, std::string y_label, double x_min, double x_max, double y_min,
           double y_max, int width, int height)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)), x_min_(x_min),
      x_max_(x_max), y_min_(y_min), y_max_(y_max), width_(width), height_(height) {
    if (!(x_max > x_min) || !(y_max > y_min)) throw std::invalid_argument("plot ranges must be non-empty");
}

double Plot::sx(double x) const { return kLeft + (x - x_min_) / (x_max_ - x_min_) * (width_ - kLeft - kRight); }
double Plot::sy(double y) const { return height_ - kBottom - (y - y_min_) / (y_max_ - y_min_) * (height_ - kTop - kBottom); }

void Plot::polyline(std::span<const double> xs, std::span<const double> ys, std::string_view color,
                    double stroke_width, bool dashed) {
    if (xs.size() != ys.size() || xs.empty()) throw std::invalid_argument("polyline needs matching points");
    std::string pts;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (!pts.empty()) pts += ' ';
        pts += fixed(sx(xs[k])) + "," + fixed(sy(std::clamp(ys[k], y_min_, y_max_)));
    }
    body_.push_back("<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"" +
                    fixed(stroke_width, 1) + "\"" + (dashed ? " stroke-dasharray=\"5,4\"" : "") + " points=\"" + pts +
                    "\"/>");
}

void Plot::markers(std::span<const double> xs, std::span<const double> ys, std::string_view color, double radius) {
    if (xs.size() != ys.size()) throw std::invalid_argument("markers need matching coordinates");
    for (std::size_t k = 0; k < xs.size(); ++k)
        body_.push_back("<circle cx=\"" + fixed(sx(xs[k])) + "\" cy=\"" + fixed(sy(ys[k])) + "\" r=\"" +
                        fixed(radius, 1) + "\" fill=\"" + std::string(color) + "\"/>");
}

void Plot::area(std::span<const double> xs, std::span<const double> ys, std::string_view color, double opacity) {
    if (xs.size() != ys.size() || xs.empty()) throw std::invalid_argument("area needs matching points");
    std::string pts = fixed(sx(xs.front())) + "," + fixed(sy(0.0));
    for (std::size_t k = 0; k < xs.size(); ++k) pts += " " + fixed(sx(xs[k])) + "," + fixed(sy(ys[k]));
    pts += " " + fixed(sx(xs.back())) + "," + fixed(sy(0.0));
    body_.push_back("<polygon fill=\"" + std::string(color) + "\" fill-opacity=\"" + fixed(opacity) +
                    "\" stroke=\"none\" points=\"" + pts + "\"/>");
}

void Plot::bar(double x0, double x1, double height, std::string_view color, double opacity) {
    const double top = sy(std::min(height, y_max_));
    body_.push_back("<rect x=\"" + fixed(sx(x0)) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(sx(x1) - sx(x0)) +
                    "\" height=\"" + fixed(sy(0.0) - top) + "\" fill=\"" + std::string(color) + "\" fill-opacity=\"" +
                    fixed(opacity) + "\" stroke=\"white\" stroke-width=\"0.5\"/>");
}

void Plot::legend(std::string_view label, std::string_view color) { legend_.emplace_back(label, color); }

std::string Plot::str() const {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_) + "\" height=\"" +
           std::to_string(height_) + "\" viewBox=\"0 0 " + std::to_string(width_) + " " + std::to_string(height_) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fixed(width_ / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(title_) + "</text>\n";

    const double x0 = sx(x_min_), x1 = sx(x_max_), y0 = sy(y_min_), y1 = sy(y_max_);
    out += "<g stroke=\"#333\" stroke-width=\"1\">\n";
    out += "<line x1=\"" + fixed(x0) + "\" y1=\"" + fixed(y0) + "\" x2=\"" + fixed(x1) + "\" y2=\"" + fixed(y0) + "\"/>\n";
    out += "<line x1=\"" + fixed(x0) + "\" y1=\"" + fixed(y0) + "\" x2=\"" + fixed(x0) + "\" y2=\"" + fixed(y1) + "\"/>\n";
    out += "</g>\n<g fill=\"#333\">\n";
    const double xs = tick_step(x_max_ - x_min_), ys = tick_step(y_max_ - y_min_);
    const int xd = xs < 1.0 ? static_cast<int>(std::ceil(-std::log10(xs))) : 0;
    const int yd = ys < 1.0 ? static_cast<int>(std::ceil(-std::log10(ys))) : 0;
    for (double t = std::ceil(x_min_ / xs - 1e-9) * xs; t <= x_max_ + 1e-9 * xs; t += xs)
        out += "<text x=\"" + fixed(sx(t)) + "\" y=\"" + fixed(y0 + 16) + "\" text-anchor=\"middle\">" + fixed(t, xd) +
               "</text>\n";
    for (double t = std::ceil(y_min_ / ys - 1e-9) * ys; t <= y_max_ + 1e-9 * ys; t += ys)
        out += "<text x=\"" + fixed(x0 - 6) + "\" y=\"" + fixed(sy(t) + 4) + "\" text-anchor=\"end\">" + fixed(t, yd) +
               "</text>\n";
    out += "<text x=\"" + fixed((x0 + x1) / 2) + "\" y=\"" + fixed(height_ - 10.0) + "\" text-anchor=\"middle\">" +
           escape(x_label_) + "</text>\n";
    out += "<text x=\"16\" y=\"" + fixed((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fixed((y0 + y1) / 2) + ")\">" + escape(y_label_) + "</text>\n";
    out += "</g>\n<g>\n";
    for (const auto& el : body_) out += el + "\n";
    out += "</g>\n";
    if (!legend_.empty()) {
        out += "<g>\n";
        double y = kTop + 8;
        for (const auto& [label, color] : legend_) {
            out += "<rect x=\"" + fixed(x1 - 120) + "\" y=\"" + fixed(y - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
                   color + "\"/>\n";
            out += "<text x=\"" + fixed(x1 - 104) + "\" y=\"" + fixed(y) + "\">" + escape(label) + "</text>\n";
            y += 16;
        }
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace calib::svg
