#include "rsrwkv/scan2d.hpp"

#include <cstdio>

namespace rsrwkv {

namespace {

ScanOrder from_sequence(std::string name, std::vector<int> seq_to_grid) {
  ScanOrder o;
  o.name = std::move(name);
  o.inv = std::move(seq_to_grid);
  o.fwd.assign(o.inv.size(), 0);
  for (std::size_t s = 0; s < o.inv.size(); ++s)
    o.fwd[static_cast<std::size_t>(o.inv[s])] = static_cast<int>(s);
  return o;
}

}  // namespace

std::vector<ScanOrder> build_scan_orders(std::size_t H, std::size_t W) {
  check_config(H >= 1 && W >= 1, "build_scan_orders: grid extents must be positive");
  const long h = static_cast<long>(H), w = static_cast<long>(W);
  std::vector<int> seq;
  seq.reserve(H * W);

  std::vector<ScanOrder> orders;
  orders.reserve(4);

  // horizontal: row-major identity
  seq.clear();
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j) seq.push_back(static_cast<int>(i * w + j));
  orders.push_back(from_sequence("horizontal", seq));

  // vertical: column-major
  seq.clear();
  for (long j = 0; j < w; ++j)
    for (long i = 0; i < h; ++i) seq.push_back(static_cast<int>(i * w + j));
  orders.push_back(from_sequence("vertical", seq));

  // Both diagonal scans walk each diagonal left to right (column ascending).
  // diag_anti: anti-diagonals s = i+j ascending; on a 2x2 grid the cell
  // sequence is (0,0), (1,0), (0,1), (1,1).
  seq.clear();
  for (long s = 0; s <= h + w - 2; ++s) {
    const long jlo = s - h + 1 > 0 ? s - h + 1 : 0;
    const long jhi = s < w - 1 ? s : w - 1;
    for (long j = jlo; j <= jhi; ++j) seq.push_back(static_cast<int>((s - j) * w + j));
  }
  orders.push_back(from_sequence("diag_anti", seq));

  // diag_main: diagonals d = i-j+(W-1) ascending (equivalently i ascending
  // within, since i and j grow together on a main diagonal).
  seq.clear();
  for (long d = 0; d <= h + w - 2; ++d) {
    const long delta = d - (w - 1);  // i - j
    const long jlo = -delta > 0 ? -delta : 0;
    const long jhi = h - 1 - delta < w - 1 ? h - 1 - delta : w - 1;
    for (long j = jlo; j <= jhi; ++j)
      seq.push_back(static_cast<int>((j + delta) * w + j));
  }
  orders.push_back(from_sequence("diag_main", seq));

  return orders;
}

std::vector<ScanOrder> scan_orders_for(int directions, std::size_t H,
                                       std::size_t W) {
  check_config(directions == 1 || directions == 2 || directions == 4,
               "scan_orders_for: direction count must be 1, 2 or 4");
  auto all = build_scan_orders(H, W);
  all.resize(static_cast<std::size_t>(directions) == 4 ? 4
             : directions == 2                         ? 2
                                                       : 1);
  return all;
}

std::string scan_orders_csv(std::size_t H, std::size_t W) {
  const auto orders = build_scan_orders(H, W);
  std::string out = "grid_index";
  for (const auto& o : orders) out += "," + o.name;
  out += "\n";
  char buf[32];
  for (std::size_t g = 0; g < H * W; ++g) {
    std::snprintf(buf, sizeof(buf), "%zu", g);
    out += buf;
    for (const auto& o : orders) {
      std::snprintf(buf, sizeof(buf), ",%d", o.fwd[g]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace rsrwkv
