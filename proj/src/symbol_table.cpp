#include "homlab/symbol_table.hpp"

#include <ostream>

#include "homlab/error.hpp"
#include "homlab/io.hpp"

namespace homlab {

void write_k1_csv(std::ostream& out, const K1Table& table) {
  std::vector<std::string> header;
  for (int j = 0; j < table.dim; ++j) header.push_back("k_" + std::to_string(j));
  header.insert(header.end(), {"xi_norm", "k1", "stderr", "delta", "M", "seed", "source"});
  write_row(out, header);
  for (const auto& p : table.points) {
    std::vector<std::string> row;
    for (int v : p.k.k()) row.push_back(std::to_string(v));
    row.insert(row.end(), {format_double(p.xi_norm), format_double(p.value), format_double(p.stderr),
                           format_double(table.delta), std::to_string(table.samples),
                           std::to_string(table.seed), table.source});
    write_row(out, row);
  }
}

K1Table read_k1_csv(const std::string& path) {
  const CsvTable csv = read_csv_file(path);
  K1Table table;
  int dim = 0;
  while (csv.has_column("k_" + std::to_string(dim))) ++dim;
  if (dim == 0) throw Error(ErrorCode::IoError, path + " is not a k1 table");
  table.dim = dim;
  if (csv.meta.count("L")) table.side = std::stoi(csv.meta.at("L"));
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    std::vector<int> k(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) k[static_cast<std::size_t>(j)] = static_cast<int>(csv.number(r, "k_" + std::to_string(j)));
    table.points.push_back({FreqVector(std::move(k)), csv.number(r, "xi_norm"), csv.number(r, "k1"),
                            csv.number(r, "stderr")});
    table.delta = csv.number(r, "delta");
    table.samples = static_cast<std::size_t>(csv.number(r, "M"));
    table.seed = std::stoull(csv.text(r, "seed"));
    table.source = csv.text(r, "source");
  }
  return table;
}

}  // namespace homlab
