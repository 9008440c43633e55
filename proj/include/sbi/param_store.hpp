#pragma once

#include <map>
#include <string>
#include <vector>

#include "sbi/tensor.hpp"

namespace sbi {

// Named flat blocks of trainable reals plus a gradient buffer of identical layout.
// Block order is the insertion order; iteration over blocks is deterministic.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor init);
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);

  const std::vector<std::string>& names() const { return order_; }
  std::size_t block_count() const { return order_.size(); }
  std::int64_t total_size() const;

  void zero_grad();

  // Flat copy of all parameter values (block order); used for snapshots.
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

  // Checkpoint: text layout descriptor followed by one hexfloat per value.
  // Hexfloat keeps the round trip bit-exact.
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);
  void write_text(std::ostream& os) const;
  static ParamStore read_text(std::istream& is);

 private:
  struct Block {
    Tensor value;
    Tensor grad;
  };
  std::map<std::string, Block> blocks_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::string> order_;
};

}  // namespace sbi
