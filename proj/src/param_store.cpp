#include "sbi/param_store.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sbi {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  if (has(name)) throw ContractViolation("ParamStore: duplicate block " + name);
  index_[name] = order_.size();
  order_.push_back(name);
  Block b;
  b.grad = Tensor::zeros(init.shape);
  b.value = std::move(init);
  auto [it, ok] = blocks_.emplace(name, std::move(b));
  (void)ok;
  return it->second.value;
}

Tensor& ParamStore::value(const std::string& name) {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) throw ContractViolation("ParamStore: unknown block " + name);
  return it->second.value;
}

const Tensor& ParamStore::value(const std::string& name) const {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) throw ContractViolation("ParamStore: unknown block " + name);
  return it->second.value;
}

Tensor& ParamStore::grad(const std::string& name) {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) throw ContractViolation("ParamStore: unknown block " + name);
  return it->second.grad;
}

std::int64_t ParamStore::total_size() const {
  std::int64_t n = 0;
  for (const auto& name : order_) n += blocks_.at(name).value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, b] : blocks_) b.grad.fill(0.0);
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(total_size()));
  for (const auto& name : order_) {
    const auto& v = blocks_.at(name).value.v;
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return flat;
}

void ParamStore::unflatten(const std::vector<double>& flat) {
  std::size_t pos = 0;
  for (const auto& name : order_) {
    auto& v = blocks_.at(name).value.v;
    if (pos + v.size() > flat.size()) throw DimensionError("ParamStore::unflatten: size mismatch");
    std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
    pos += v.size();
  }
  if (pos != flat.size()) throw DimensionError("ParamStore::unflatten: size mismatch");
}

void ParamStore::write_text(std::ostream& os) const {
  os << "params " << order_.size() << "\n";
  for (const auto& name : order_) {
    const auto& b = blocks_.at(name);
    os << "block " << name << " " << b.value.shape.size();
    for (auto d : b.value.shape) os << " " << d;
    os << "\n";
  }
  char buf[64];
  for (const auto& name : order_) {
    for (double x : blocks_.at(name).value.v) {
      std::snprintf(buf, sizeof(buf), "%a", x);
      os << buf << "\n";
    }
  }
}

ParamStore ParamStore::read_text(std::istream& is) {
  std::string tag;
  std::size_t nblocks = 0;
  is >> tag >> nblocks;
  if (tag != "params") throw UsageError("ParamStore: bad checkpoint header");
  ParamStore ps;
  std::vector<std::string> names(nblocks);
  std::vector<std::vector<std::int64_t>> shapes(nblocks);
  for (std::size_t i = 0; i < nblocks; ++i) {
    std::size_t rank = 0;
    is >> tag >> names[i] >> rank;
    if (tag != "block") throw UsageError("ParamStore: bad block line");
    shapes[i].resize(rank);
    for (auto& d : shapes[i]) is >> d;
  }
  for (std::size_t i = 0; i < nblocks; ++i) {
    Tensor t = Tensor::zeros(shapes[i]);
    for (auto& x : t.v) {
      std::string s;
      is >> s;
      x = std::strtod(s.c_str(), nullptr);
    }
    if (!is) throw UsageError("ParamStore: truncated checkpoint");
    ps.add(names[i], std::move(t));
  }
  return ps;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot open " + path + " for writing");
  write_text(os);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path);
  return read_text(is);
}

}  // namespace sbi
