#include "rvts/series_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "rvts/error.hpp"

namespace rvts::series_io {

void write_path_csv(const models::SeriesPath& path, const std::string& file) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(file.c_str(), "w"), &std::fclose);
  if (!f) throw IoError("cannot write " + file);
  const std::size_t d = path.dim();
  std::fprintf(f.get(), "#space %s\n", path.space->descriptor().c_str());
  for (std::size_t c = 0; c < d; ++c) std::fprintf(f.get(), c ? ",x%zu" : "x%zu", c);
  std::fputc('\n', f.get());
  for (std::size_t t = 0; t < path.n; ++t) {
    const auto x = path.at(t);
    for (std::size_t c = 0; c < d; ++c) std::fprintf(f.get(), c ? ",%.17g" : "%.17g", x[c]);
    std::fputc('\n', f.get());
  }
  if (std::ferror(f.get())) throw IoError("write failed for " + file);
}

models::SeriesPath ingest(const std::string& file, std::optional<std::string_view> space_block) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file);
  starspace::SpaceHandle space;
  if (space_block) space = starspace::make_space(*space_block);

  models::SeriesPath path;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<std::size_t> lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!space && line.rfind("#space ", 0) == 0) space = starspace::make_space(std::string_view(line).substr(7));
      continue;
    }
    if (!space) throw ConfigError("space", "no space block given and no #space line in " + file);
    const std::size_t d = space->dim();
    std::size_t columns = 1;
    for (char ch : line) columns += ch == ',';
    if (!header_seen && (std::isalpha(static_cast<unsigned char>(line.front())) || line.front() == '"') &&
        line.rfind("nan", 0) != 0 && line.rfind("inf", 0) != 0) {
      header_seen = true;
      if (columns != d)
        throw ShapeMismatch(file + ": header has " + std::to_string(columns) + " columns, space " +
                            space->descriptor() + " needs " + std::to_string(d));
      continue;
    }
    header_seen = true;
    if (columns != d)
      throw ShapeMismatch(file + ": line " + std::to_string(line_no) + " has " + std::to_string(columns) +
                          " columns, expected " + std::to_string(d));
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t c = 0; c < d; ++c) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(p, end, v);
      const char* next = ptr;
      while (next < end && *next == ' ') ++next;
      if (ec != std::errc() || !std::isfinite(v) || (next < end && *next != ','))
        throw ParseError(line_no, "non-numeric or non-finite value in column " + std::to_string(c));
      path.coords.push_back(v);
      p = next + 1;
    }
    ++path.n;
    lines.push_back(line_no);
  }
  if (!space) throw ConfigError("space", "no space block given and no #space line in " + file);
  if (path.n == 0) throw ParseError(line_no, "no data rows");
  path.space = space;
  for (std::size_t t = 0; t < path.n; ++t) {
    try {
      space->check_point(path.at(t));
    } catch (const InvalidParameter& e) {
      throw ParseError(lines[t], e.what());
    }
  }
  return path;
}

}  // namespace rvts::series_io
