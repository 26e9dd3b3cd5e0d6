#pragma once

#include <cstdint>
#include <string>

#include "evflow/accumulator.hpp"
#include "evflow/grid.hpp"

namespace evflow {

void write_ppm(const std::string& path, const RgbImage& image);
void write_pgm(const std::string& path, const Grid<std::uint8_t>& image);

// Reads binary PGM (P5) or PPM (P6) with maxval 255. Colour input is reduced
// to BT.601 luma.
Grid<std::uint8_t> read_gray(const std::string& path);

}  // namespace evflow
