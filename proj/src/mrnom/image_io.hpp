#pragma once

#include <string>

#include "mrnom/eval.hpp"
#include "mrnom/raster.hpp"

namespace mrnom {

/// PNG or TIFF, detected from the file signature. Alpha is dropped; 16-bit samples keep their high byte.
Image8 read_image(const std::string& path);

void write_png(const std::string& path, const Image8& img);
void write_png(const std::string& path, const Rgb8& img);

/// Single-channel PNG, 8- or 16-bit.
LabelMap read_label_png(const std::string& path);
/// 16-bit single-channel PNG; fails above 65535 labels.
void write_label_png(const std::string& path, const LabelMap& lb);

std::string read_text(const std::string& path);
/// Writes through a temporary file in the same directory, then renames.
void write_text(const std::string& path, const std::string& text);

}  // namespace mrnom
