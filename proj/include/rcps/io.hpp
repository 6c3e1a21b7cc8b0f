#pragma once
// File formats shared by the CLI and its tests.
//
// Loss matrix CSV: the header row holds the ascending lambda grid; every
// following row is one calibration example's losses. Numbers are written with
// 17 significant digits so a write/read round trip is lossless.
// Label tree file: one line per node, "id,parent_id,label_or_dash", with the
// root's parent_id equal to its own id.

#include <string>
#include <vector>

#include "rcps/calibration.hpp"
#include "rcps/setfns.hpp"

namespace rcps {

LossMatrix read_loss_matrix_csv(const std::string& path);
void write_loss_matrix_csv(const LossMatrix& matrix, const std::string& path);

// One loss value per line.
std::vector<double> read_loss_column(const std::string& path);

LabelTree read_label_tree(const std::string& path);

// Shortest round-trip-safe decimal rendering used in all CSV output.
std::string format_double(double v);

} // namespace rcps
