#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace flowcast::evaluation {

/// Minimal line/band chart written as standalone SVG.
class SvgChart {
 public:
  SvgChart(std::string title, std::string x_label, std::string y_label);

  void add_line(std::string name, std::vector<double> xs, std::vector<double> ys,
                std::string color = "", bool dashed = false);
  void add_band(std::string name, std::vector<double> xs, std::vector<double> lower,
                std::vector<double> upper, std::string color = "");
  void add_points(std::string name, std::vector<double> xs, std::vector<double> ys,
                  std::string color = "");

  std::string render(int width = 720, int height = 440) const;
  void write(const std::filesystem::path& path) const;

 private:
  enum class Kind { Line, DashedLine, Band, Points };
  struct Series {
    Kind kind;
    std::string name;
    std::string color;
    std::vector<double> xs, ys, upper;
  };

  std::string next_color();

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::size_t palette_index_ = 0;
};

}  // namespace flowcast::evaluation
