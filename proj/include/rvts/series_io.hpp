#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rvts/models.hpp"

namespace rvts::series_io {

// Path CSV: a `#space <descriptor>` line, a header x0,...,x{d-1}, then one row
// per time with %.17g values (exact round trip).
void write_path_csv(const models::SeriesPath& path, const std::string& file);

// Reads a path CSV. The space comes from `space_block` when given, else from
// the file's #space line. Throws ParseError (with the 1-based line number) on
// non-numeric or non-finite values, ShapeMismatch on a column count that does
// not match the space, IoError when the file cannot be read.
models::SeriesPath ingest(const std::string& file, std::optional<std::string_view> space_block = {});

}  // namespace rvts::series_io
