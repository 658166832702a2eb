#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace glcnet {

using Rgb = std::array<uint8_t, 3>;

class Canvas {
 public:
  Canvas(int width, int height, Rgb background = {255, 255, 255});

  int width() const { return w_; }
  int height() const { return h_; }
  Rgb pixel(int x, int y) const;

  void set(int x, int y, Rgb c);
  void line(int x0, int y0, int x1, int y1, Rgb c);
  void fill_rect(int x, int y, int w, int h, Rgb c);
  // 6x11 bitmap glyphs, printable ASCII.
  void text(int x, int y, const std::string& s, Rgb c);
  static int text_width(const std::string& s) { return 6 * static_cast<int>(s.size()); }

  void write_png(const std::filesystem::path& path) const;

 private:
  int w_, h_;
  std::vector<uint8_t> rgb_;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  Rgb color;
};

Canvas line_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series,
                  int width = 640, int height = 400);
Canvas bar_chart(const std::string& title, const std::vector<std::string>& labels, const std::vector<double>& values,
                 double y_max, int width = 640, int height = 400);

// Renders whatever of loss.csv, metrics.csv and ablation.csv exist in run_dir
// (loss.png, f1.png, ablation.png); returns the written files.
std::vector<std::filesystem::path> plot_run(const std::filesystem::path& run_dir);

}  // namespace glcnet
