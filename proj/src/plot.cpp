#include "glcnet/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "glcnet/error.hpp"
#include "glcnet/image.hpp"
#include "glcnet/util.hpp"

namespace glcnet {

namespace fs = std::filesystem;

namespace {

// Glyphs for ASCII 32..126, one byte per row, bit 5 is the leftmost column.
constexpr uint8_t kFont[95][11] = {
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // ' '
    {0x00, 0x00, 0x00, 0x18, 0x18, 0x18, 0x18, 0x00, 0x18, 0x00, 0x00},  // '!'
    {0x00, 0x00, 0x00, 0x14, 0x14, 0x14, 0x00, 0x00, 0x00, 0x00, 0x00},  // '"'
    {0x00, 0x00, 0x14, 0x14, 0x3e, 0x14, 0x14, 0x3e, 0x14, 0x14, 0x00},  // '#'
    {0x00, 0x08, 0x1e, 0x32, 0x3c, 0x1e, 0x06, 0x36, 0x3c, 0x08, 0x00},  // '$'
    {0x00, 0x00, 0x38, 0x2a, 0x3c, 0x08, 0x1e, 0x2a, 0x0e, 0x00, 0x00},  // '%'
    {0x00, 0x00, 0x00, 0x1c, 0x30, 0x18, 0x3e, 0x2c, 0x3e, 0x00, 0x00},  // '&'
    {0x00, 0x00, 0x0c, 0x08, 0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // '\''
    {0x00, 0x00, 0x04, 0x08, 0x18, 0x18, 0x18, 0x18, 0x08, 0x04, 0x00},  // '('
    {0x00, 0x00, 0x10, 0x08, 0x0c, 0x0c, 0x0c, 0x0c, 0x08, 0x10, 0x00},  // ')'
    {0x00, 0x00, 0x08, 0x3c, 0x18, 0x24, 0x00, 0x00, 0x00, 0x00, 0x00},  // '*'
    {0x00, 0x00, 0x00, 0x08, 0x08, 0x3e, 0x08, 0x08, 0x00, 0x00, 0x00},  // '+'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x08, 0x10},  // ','
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x3e, 0x00, 0x00, 0x00, 0x00, 0x00},  // '-'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x18, 0x00, 0x00},  // '.'
    {0x00, 0x00, 0x02, 0x02, 0x04, 0x04, 0x08, 0x08, 0x10, 0x10, 0x00},  // '/'
    {0x00, 0x00, 0x1c, 0x36, 0x36, 0x36, 0x36, 0x36, 0x1c, 0x00, 0x00},  // '0'
    {0x00, 0x00, 0x0c, 0x3c, 0x0c, 0x0c, 0x0c, 0x0c, 0x3f, 0x00, 0x00},  // '1'
    {0x00, 0x00, 0x1c, 0x36, 0x06, 0x0c, 0x18, 0x36, 0x3e, 0x00, 0x00},  // '2'
    {0x00, 0x00, 0x1c, 0x36, 0x06, 0x1c, 0x06, 0x36, 0x1c, 0x00, 0x00},  // '3'
    {0x00, 0x00, 0x06, 0x0e, 0x16, 0x36, 0x3f, 0x06, 0x06, 0x00, 0x00},  // '4'
    {0x00, 0x00, 0x3e, 0x30, 0x3c, 0x36, 0x06, 0x26, 0x3c, 0x00, 0x00},  // '5'
    {0x00, 0x00, 0x1c, 0x36, 0x30, 0x3c, 0x36, 0x36, 0x1c, 0x00, 0x00},  // '6'
    {0x00, 0x00, 0x3e, 0x36, 0x06, 0x0c, 0x0c, 0x18, 0x18, 0x00, 0x00},  // '7'
    {0x00, 0x00, 0x1c, 0x36, 0x36, 0x1c, 0x36, 0x36, 0x1c, 0x00, 0x00},  // '8'
    {0x00, 0x00, 0x1c, 0x36, 0x36, 0x1e, 0x06, 0x36, 0x1c, 0x00, 0x00},  // '9'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x18, 0x00, 0x00, 0x18, 0x00, 0x00},  // ':'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x18, 0x00, 0x00, 0x18, 0x10, 0x20},  // ';'
    {0x00, 0x00, 0x00, 0x0c, 0x18, 0x30, 0x18, 0x0c, 0x00, 0x00, 0x00},  // '<'
    {0x00, 0x00, 0x00, 0x00, 0x3c, 0x00, 0x3c, 0x00, 0x00, 0x00, 0x00},  // '='
    {0x00, 0x00, 0x00, 0x18, 0x0c, 0x06, 0x0c, 0x18, 0x00, 0x00, 0x00},  // '>'
    {0x00, 0x00, 0x00, 0x1c, 0x26, 0x0c, 0x18, 0x00, 0x18, 0x00, 0x00},  // '?'
    {0x00, 0x00, 0x1c, 0x32, 0x26, 0x2a, 0x2a, 0x27, 0x30, 0x1c, 0x00},  // '@'
    {0x00, 0x00, 0x00, 0x3c, 0x1c, 0x14, 0x3e, 0x36, 0x37, 0x00, 0x00},  // 'A'
    {0x00, 0x00, 0x00, 0x3c, 0x36, 0x3c, 0x36, 0x36, 0x3c, 0x00, 0x00},  // 'B'
    {0x00, 0x00, 0x00, 0x1e, 0x36, 0x30, 0x30, 0x36, 0x1c, 0x00, 0x00},  // 'C'
    {0x00, 0x00, 0x00, 0x3c, 0x36, 0x36, 0x36, 0x36, 0x3c, 0x00, 0x00},  // 'D'
    {0x00, 0x00, 0x00, 0x3e, 0x30, 0x3c, 0x30, 0x36, 0x3e, 0x00, 0x00},  // 'E'
    {0x00, 0x00, 0x00, 0x3e, 0x30, 0x3c, 0x30, 0x30, 0x38, 0x00, 0x00},  // 'F'
    {0x00, 0x00, 0x00, 0x1c, 0x36, 0x30, 0x3e, 0x36, 0x1e, 0x00, 0x00},  // 'G'
    {0x00, 0x00, 0x00, 0x37, 0x36, 0x3e, 0x36, 0x36, 0x37, 0x00, 0x00},  // 'H'
    {0x00, 0x00, 0x00, 0x3c, 0x18, 0x18, 0x18, 0x18, 0x3c, 0x00, 0x00},  // 'I'
    {0x00, 0x00, 0x00, 0x1e, 0x0c, 0x0c, 0x2c, 0x2c, 0x38, 0x00, 0x00},  // 'J'
    {0x00, 0x00, 0x00, 0x36, 0x34, 0x38, 0x3c, 0x36, 0x3b, 0x00, 0x00},  // 'K'
    {0x00, 0x00, 0x00, 0x38, 0x30, 0x30, 0x30, 0x36, 0x3e, 0x00, 0x00},  // 'L'
    {0x00, 0x00, 0x00, 0x22, 0x36, 0x36, 0x3e, 0x2a, 0x2a, 0x00, 0x00},  // 'M'
    {0x00, 0x00, 0x00, 0x37, 0x3a, 0x3a, 0x36, 0x36, 0x32, 0x00, 0x00},  // 'N'
    {0x00, 0x00, 0x00, 0x1c, 0x36, 0x36, 0x36, 0x36, 0x1c, 0x00, 0x00},  // 'O'
    {0x00, 0x00, 0x00, 0x3c, 0x36, 0x36, 0x3c, 0x30, 0x38, 0x00, 0x00},  // 'P'
    {0x00, 0x00, 0x00, 0x1c, 0x36, 0x36, 0x36, 0x36, 0x1c, 0x06, 0x00},  // 'Q'
    {0x00, 0x00, 0x00, 0x3c, 0x36, 0x36, 0x3c, 0x36, 0x3b, 0x00, 0x00},  // 'R'
    {0x00, 0x00, 0x00, 0x1e, 0x32, 0x3c, 0x0e, 0x26, 0x3c, 0x00, 0x00},  // 'S'
    {0x00, 0x00, 0x00, 0x3e, 0x1a, 0x18, 0x18, 0x18, 0x3c, 0x00, 0x00},  // 'T'
    {0x00, 0x00, 0x00, 0x37, 0x36, 0x36, 0x36, 0x36, 0x1c, 0x00, 0x00},  // 'U'
    {0x00, 0x00, 0x00, 0x37, 0x36, 0x14, 0x1c, 0x1c, 0x08, 0x00, 0x00},  // 'V'
    {0x00, 0x00, 0x00, 0x2b, 0x2a, 0x2a, 0x3e, 0x1c, 0x14, 0x00, 0x00},  // 'W'
    {0x00, 0x00, 0x00, 0x33, 0x1e, 0x0c, 0x0c, 0x1e, 0x33, 0x00, 0x00},  // 'X'
    {0x00, 0x00, 0x00, 0x33, 0x33, 0x1e, 0x0c, 0x0c, 0x1e, 0x00, 0x00},  // 'Y'
    {0x00, 0x00, 0x00, 0x3e, 0x36, 0x0c, 0x18, 0x36, 0x3e, 0x00, 0x00},  // 'Z'
    {0x00, 0x00, 0x1c, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x1c, 0x00},  // '['
    {0x00, 0x00, 0x20, 0x20, 0x10, 0x10, 0x08, 0x08, 0x04, 0x04, 0x00},  // '\\'
    {0x00, 0x00, 0x1c, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x1c, 0x00},  // ']'
    {0x00, 0x00, 0x08, 0x1c, 0x36, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // '^'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x3f},  // '_'
    {0x00, 0x00, 0x18, 0x08, 0x04, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // '`'
    {0x00, 0x00, 0x00, 0x00, 0x1c, 0x36, 0x1e, 0x36, 0x3f, 0x00, 0x00},  // 'a'
    {0x00, 0x00, 0x30, 0x30, 0x3c, 0x36, 0x36, 0x36, 0x3c, 0x00, 0x00},  // 'b'
    {0x00, 0x00, 0x00, 0x00, 0x1c, 0x36, 0x30, 0x36, 0x1c, 0x00, 0x00},  // 'c'
    {0x00, 0x00, 0x0e, 0x06, 0x1e, 0x36, 0x36, 0x36, 0x1f, 0x00, 0x00},  // 'd'
    {0x00, 0x00, 0x00, 0x00, 0x1c, 0x36, 0x3e, 0x30, 0x1e, 0x00, 0x00},  // 'e'
    {0x00, 0x00, 0x0e, 0x18, 0x3e, 0x18, 0x18, 0x18, 0x3e, 0x00, 0x00},  // 'f'
    {0x00, 0x00, 0x00, 0x00, 0x1b, 0x36, 0x36, 0x36, 0x1e, 0x06, 0x3c},  // 'g'
    {0x00, 0x00, 0x30, 0x30, 0x3c, 0x36, 0x36, 0x36, 0x36, 0x00, 0x00},  // 'h'
    {0x00, 0x00, 0x0c, 0x00, 0x3c, 0x0c, 0x0c, 0x0c, 0x3f, 0x00, 0x00},  // 'i'
    {0x00, 0x00, 0x0c, 0x00, 0x3c, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x38},  // 'j'
    {0x00, 0x00, 0x30, 0x30, 0x36, 0x3c, 0x38, 0x3c, 0x37, 0x00, 0x00},  // 'k'
    {0x00, 0x00, 0x3c, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x3f, 0x00, 0x00},  // 'l'
    {0x00, 0x00, 0x00, 0x00, 0x3c, 0x3e, 0x2a, 0x2a, 0x2a, 0x00, 0x00},  // 'm'
    {0x00, 0x00, 0x00, 0x00, 0x2c, 0x36, 0x36, 0x36, 0x36, 0x00, 0x00},  // 'n'
    {0x00, 0x00, 0x00, 0x00, 0x1c, 0x36, 0x36, 0x36, 0x1c, 0x00, 0x00},  // 'o'
    {0x00, 0x00, 0x00, 0x00, 0x3c, 0x36, 0x36, 0x36, 0x3c, 0x30, 0x38},  // 'p'
    {0x00, 0x00, 0x00, 0x00, 0x1b, 0x36, 0x36, 0x36, 0x1e, 0x06, 0x0f},  // 'q'
    {0x00, 0x00, 0x00, 0x00, 0x37, 0x1d, 0x18, 0x18, 0x3c, 0x00, 0x00},  // 'r'
    {0x00, 0x00, 0x00, 0x00, 0x1e, 0x38, 0x1e, 0x07, 0x3e, 0x00, 0x00},  // 's'
    {0x00, 0x00, 0x18, 0x18, 0x3e, 0x18, 0x18, 0x1b, 0x0e, 0x00, 0x00},  // 't'
    {0x00, 0x00, 0x00, 0x00, 0x36, 0x36, 0x36, 0x36, 0x1f, 0x00, 0x00},  // 'u'
    {0x00, 0x00, 0x00, 0x00, 0x36, 0x36, 0x1c, 0x1c, 0x08, 0x00, 0x00},  // 'v'
    {0x00, 0x00, 0x00, 0x00, 0x2b, 0x2a, 0x3e, 0x1e, 0x14, 0x00, 0x00},  // 'w'
    {0x00, 0x00, 0x00, 0x00, 0x3b, 0x1e, 0x0c, 0x1e, 0x37, 0x00, 0x00},  // 'x'
    {0x00, 0x00, 0x00, 0x00, 0x37, 0x36, 0x36, 0x14, 0x1c, 0x18, 0x30},  // 'y'
    {0x00, 0x00, 0x00, 0x00, 0x3e, 0x2c, 0x18, 0x36, 0x3e, 0x00, 0x00},  // 'z'
    {0x00, 0x00, 0x06, 0x0c, 0x0c, 0x18, 0x0c, 0x0c, 0x0c, 0x06, 0x00},  // '{'
    {0x00, 0x00, 0x00, 0x08, 0x08, 0x08, 0x08, 0x08, 0x08, 0x08, 0x00},  // '|'
    {0x00, 0x00, 0x30, 0x18, 0x18, 0x0c, 0x18, 0x18, 0x18, 0x30, 0x00},  // '}'
    {0x00, 0x00, 0x00, 0x00, 0x1a, 0x2c, 0x00, 0x00, 0x00, 0x00, 0x00},  // '~'

};

constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrid{225, 225, 225};
constexpr Rgb kAxis{90, 90, 90};

std::string tick_label(double v) {
  char buf[32];
  const double a = std::fabs(v);
  if (a != 0.0 && (a < 1e-3 || a >= 1e5)) {
    std::snprintf(buf, sizeof(buf), "%.2e", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3g", v);
  }
  return buf;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& line : split(read_text_file(path), '\n')) {
    if (!trim(line).empty()) rows.push_back(split(line, ','));
  }
  if (rows.size() < 2) throw FormatError(path.string() + " has no data rows");
  return rows;
}

int column(const std::vector<std::string>& header, const std::string& name, const fs::path& path) {
  for (size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == name) return static_cast<int>(i);
  }
  throw FormatError(path.string() + " has no column '" + name + "'");
}

double cell(const std::vector<std::string>& row, int col) {
  if (col >= static_cast<int>(row.size()) || trim(row[static_cast<size_t>(col)]).empty()) return NAN;
  return std::stod(row[static_cast<size_t>(col)]);
}

}  // namespace

Canvas::Canvas(int width, int height, Rgb background) : w_(width), h_(height) {
  if (width < 1 || height < 1) throw InvalidArgument("canvas must be at least 1x1");
  rgb_.resize(static_cast<size_t>(width) * height * 3);
  for (size_t i = 0; i < rgb_.size(); i += 3) std::copy(background.begin(), background.end(), rgb_.begin() + i);
}

Rgb Canvas::pixel(int x, int y) const {
  const size_t o = (static_cast<size_t>(y) * w_ + x) * 3;
  return {rgb_[o], rgb_[o + 1], rgb_[o + 2]};
}

void Canvas::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
  const size_t o = (static_cast<size_t>(y) * w_ + x) * 3;
  rgb_[o] = c[0];
  rgb_[o + 1] = c[1];
  rgb_[o + 2] = c[2];
}

void Canvas::line(int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Canvas::fill_rect(int x, int y, int w, int h, Rgb c) {
  for (int r = y; r < y + h; ++r) {
    for (int q = x; q < x + w; ++q) set(q, r, c);
  }
}

void Canvas::text(int x, int y, const std::string& s, Rgb c) {
  for (size_t i = 0; i < s.size(); ++i) {
    int ch = static_cast<unsigned char>(s[i]);
    if (ch < 32 || ch > 126) ch = '?';
    const uint8_t* g = kFont[ch - 32];
    for (int r = 0; r < 11; ++r) {
      for (int q = 0; q < 6; ++q) {
        if (g[r] >> (5 - q) & 1) set(x + 6 * static_cast<int>(i) + q, y + r, c);
      }
    }
  }
}

void Canvas::write_png(const fs::path& path) const {
  Image img(3, h_, w_);
  for (int y = 0; y < h_; ++y) {
    for (int x = 0; x < w_; ++x) {
      const Rgb p = pixel(x, y);
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = p[static_cast<size_t>(c)] / 255.0f;
    }
  }
  write_image(path, img);
}

Canvas line_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series, int width,
                  int height) {
  Canvas cv(width, height);
  const int left = 70, right = width - 20, top = 40, bottom = height - 50;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double x) { return left + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (right - left))); };
  auto py = [&](double y) { return bottom - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (bottom - top))); };

  for (int t = 0; t <= 5; ++t) {
    const double yv = ymin + (ymax - ymin) * t / 5.0;
    const int y = py(yv);
    cv.line(left, y, right, y, kGrid);
    const std::string lab = tick_label(yv);
    cv.text(left - 6 - Canvas::text_width(lab), y - 5, lab, kAxis);
    const double xv = xmin + (xmax - xmin) * t / 5.0;
    const int x = px(xv);
    const std::string xl = tick_label(xv);
    cv.text(x - Canvas::text_width(xl) / 2, bottom + 6, xl, kAxis);
  }
  cv.line(left, top, left, bottom, kAxis);
  cv.line(left, bottom, right, bottom, kAxis);
  cv.text((width - Canvas::text_width(title)) / 2, 12, title, kBlack);
  cv.text((left + right - Canvas::text_width(x_label)) / 2, bottom + 24, x_label, kAxis);

  int legend_x = left + 10;
  for (const auto& s : series) {
    for (size_t i = 1; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i - 1]) || !std::isfinite(s.y[i])) continue;
      cv.line(px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]), s.color);
      cv.line(px(s.x[i - 1]), py(s.y[i - 1]) + 1, px(s.x[i]), py(s.y[i]) + 1, s.color);
    }
    if (s.x.size() == 1 && std::isfinite(s.y[0])) cv.fill_rect(px(s.x[0]) - 2, py(s.y[0]) - 2, 5, 5, s.color);
    cv.fill_rect(legend_x, top + 4, 14, 4, s.color);
    cv.text(legend_x + 18, top, s.name, kBlack);
    legend_x += 18 + Canvas::text_width(s.name) + 16;
  }
  return cv;
}

Canvas bar_chart(const std::string& title, const std::vector<std::string>& labels, const std::vector<double>& values,
                 double y_max, int width, int height) {
  if (labels.size() != values.size()) throw InvalidArgument("bar chart needs one label per value");
  Canvas cv(width, height);
  const int left = 60, right = width - 20, top = 40, bottom = height - 50;
  if (!(y_max > 0)) y_max = 1;
  auto py = [&](double y) { return bottom - static_cast<int>(std::lround(y / y_max * (bottom - top))); };
  for (int t = 0; t <= 5; ++t) {
    const double yv = y_max * t / 5.0;
    cv.line(left, py(yv), right, py(yv), kGrid);
    const std::string lab = tick_label(yv);
    cv.text(left - 6 - Canvas::text_width(lab), py(yv) - 5, lab, kAxis);
  }
  cv.line(left, top, left, bottom, kAxis);
  cv.line(left, bottom, right, bottom, kAxis);
  cv.text((width - Canvas::text_width(title)) / 2, 12, title, kBlack);
  const int n = static_cast<int>(values.size());
  if (n == 0) return cv;
  const int slot = (right - left) / n;
  const int bw = std::max(2, slot * 2 / 3);
  for (int i = 0; i < n; ++i) {
    const int x = left + i * slot + (slot - bw) / 2;
    const double v = std::isfinite(values[static_cast<size_t>(i)]) ? std::clamp(values[static_cast<size_t>(i)], 0.0, y_max) : 0.0;
    cv.fill_rect(x, py(v), bw, bottom - py(v), {70, 110, 180});
    const std::string val = tick_label(values[static_cast<size_t>(i)]);
    cv.text(x + (bw - Canvas::text_width(val)) / 2, py(v) - 14, val, kBlack);
    std::string lab = labels[static_cast<size_t>(i)];
    const size_t max_chars = static_cast<size_t>(std::max(1, slot / 6));
    if (lab.size() > max_chars) lab = lab.substr(0, max_chars);
    cv.text(left + i * slot + (slot - Canvas::text_width(lab)) / 2, bottom + 6, lab, kAxis);
  }
  return cv;
}

std::vector<fs::path> plot_run(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw IoError("run directory does not exist: " + run_dir.string());
  std::vector<fs::path> written;
  if (const fs::path p = run_dir / "loss.csv"; fs::exists(p)) {
    const auto rows = read_csv(p);
    const int ce = column(rows[0], "epoch", p), cg = column(rows[0], "L_G", p), cl = column(rows[0], "L_L", p),
              ct = column(rows[0], "L_total", p);
    Series g{"L_G", {}, {}, {200, 80, 60}}, l{"L_L", {}, {}, {60, 150, 80}}, t{"L_total", {}, {}, {40, 70, 160}};
    for (size_t i = 1; i < rows.size(); ++i) {
      const double e = cell(rows[i], ce);
      for (auto [s, c] : {std::pair{&g, cg}, std::pair{&l, cl}, std::pair{&t, ct}}) {
        s->x.push_back(e);
        s->y.push_back(cell(rows[i], c));
      }
    }
    line_chart("Pretraining loss", "epoch", {t, g, l}).write_png(run_dir / "loss.png");
    written.push_back(run_dir / "loss.png");
  }
  if (const fs::path p = run_dir / "metrics.csv"; fs::exists(p)) {
    const auto rows = read_csv(p);
    const int cr = column(rows[0], "row", p), cf = column(rows[0], "f1", p);
    std::vector<std::string> labels;
    std::vector<double> values;
    for (size_t i = 1; i < rows.size(); ++i) {
      const std::string name = trim(rows[i][static_cast<size_t>(cr)]);
      labels.push_back(name == "summary" ? "macro" : name);
      values.push_back(cell(rows[i], cf));
    }
    bar_chart("F1 per class", labels, values, 1.0).write_png(run_dir / "f1.png");
    written.push_back(run_dir / "f1.png");
  }
  if (const fs::path p = run_dir / "ablation.csv"; fs::exists(p)) {
    const auto rows = read_csv(p);
    const int cn = column(rows[0], "config", p), ck = column(rows[0], "kappa", p);
    std::vector<std::string> labels;
    std::vector<double> values;
    for (size_t i = 1; i < rows.size(); ++i) {
      labels.push_back(trim(rows[i][static_cast<size_t>(cn)]));
      values.push_back(cell(rows[i], ck));
    }
    double top = 0;
    for (double v : values) top = std::max(top, std::isfinite(v) ? v : 0.0);
    bar_chart("Kappa per configuration", labels, values, top > 0 ? std::min(1.0, top * 1.2) : 1.0)
        .write_png(run_dir / "ablation.png");
    written.push_back(run_dir / "ablation.png");
  }
  if (written.empty()) throw InvalidArgument("no loss.csv, metrics.csv or ablation.csv in " + run_dir.string());
  return written;
}

}  // namespace glcnet
