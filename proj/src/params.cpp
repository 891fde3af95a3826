#include "lanegnn/params.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lanegnn/util.hpp"

namespace lanegnn {

int ParameterStore::add(const std::string& name, int rows, int cols) {
  if (rows <= 0 || cols <= 0) {
    throw std::logic_error("ParameterStore::add: bad shape for " + name);
  }
  if (index_.count(name)) {
    throw std::logic_error("ParameterStore::add: duplicate name " + name);
  }
  int id = static_cast<int>(entries_.size());
  entries_.push_back(Entry{name, Matrix(rows, cols), Matrix(rows, cols)});
  index_[name] = id;
  return id;
}

int ParameterStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

void ParameterStore::zero_grads() {
  for (auto& e : entries_) {
    std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
  }
}

double ParameterStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_) {
    for (double g : e.grad.data) sq += g * g;
  }
  return std::sqrt(sq);
}

void ParameterStore::clip_grad_norm(double max_norm) {
  double norm = grad_norm();
  if (norm <= max_norm || norm == 0.0) return;
  double scale = max_norm / norm;
  for (auto& e : entries_) {
    for (double& g : e.grad.data) g *= scale;
  }
}

int ParameterStore::total_parameters() const {
  int n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::vector<double> ParameterStore::flatten_values() const {
  std::vector<double> out;
  for (const auto& e : entries_) {
    out.insert(out.end(), e.value.data.begin(), e.value.data.end());
  }
  return out;
}

std::vector<double> ParameterStore::flatten_grads() const {
  std::vector<double> out;
  for (const auto& e : entries_) {
    out.insert(out.end(), e.grad.data.begin(), e.grad.data.end());
  }
  return out;
}

void ParameterStore::save(const std::string& path,
                          const std::map<std::string, std::string>& meta) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  f << "lanegnn checkpoint v1\n";
  for (const auto& [k, v] : meta) f << "meta " << k << " " << v << "\n";
  for (const auto& e : entries_) {
    f << "tensor " << e.name << " " << e.value.rows << " " << e.value.cols << "\n";
    for (int r = 0; r < e.value.rows; ++r) {
      for (int c = 0; c < e.value.cols; ++c) {
        if (c) f << ' ';
        f << format_double_hex(e.value.at(r, c));
      }
      f << '\n';
    }
  }
  f << "end\n";
  if (!f) throw std::runtime_error("failed writing checkpoint: " + path);
}

std::map<std::string, std::string> ParameterStore::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(f, line) || line != "lanegnn checkpoint v1") {
    throw ParseError(path + ": not a recognized checkpoint (bad header)");
  }
  std::map<std::string, std::string> meta;
  std::vector<bool> seen(entries_.size(), false);
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line == "end") {
      for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!seen[i]) {
          throw ParseError(path + ": checkpoint is missing tensor " + entries_[i].name);
        }
      }
      return meta;
    }
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "meta") {
      std::string key;
      ss >> key;
      std::string value;
      std::getline(ss, value);
      if (!value.empty() && value.front() == ' ') value.erase(value.begin());
      meta[key] = value;
      continue;
    }
    if (kind != "tensor") {
      throw ParseError(path + ":" + std::to_string(lineno) + ": unexpected record '" + kind + "'");
    }
    std::string name;
    int rows = 0, cols = 0;
    ss >> name >> rows >> cols;
    if (name.empty() || rows <= 0 || cols <= 0) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed tensor header");
    }
    int id = find(name);
    if (id < 0) {
      throw ParseError(path + ": checkpoint tensor " + name +
                       " does not exist in this network (incompatible checkpoint)");
    }
    Matrix& m = entries_[id].value;
    if (m.rows != rows || m.cols != cols) {
      throw ParseError(path + ": shape mismatch for " + name + ": file " +
                       std::to_string(rows) + "x" + std::to_string(cols) + ", network " +
                       std::to_string(m.rows) + "x" + std::to_string(m.cols));
    }
    for (int r = 0; r < rows; ++r) {
      if (!std::getline(f, line)) {
        throw ParseError(path + ": truncated tensor " + name);
      }
      ++lineno;
      std::istringstream row(line);
      std::string tok;
      for (int c = 0; c < cols; ++c) {
        if (!(row >> tok)) {
          throw ParseError(path + ":" + std::to_string(lineno) + ": short row in tensor " + name);
        }
        m.at(r, c) = parse_double(tok, path + ":" + std::to_string(lineno));
      }
    }
    seen[id] = true;
  }
  throw ParseError(path + ": missing 'end' record (truncated checkpoint)");
}

std::map<std::string, std::string> read_checkpoint_meta(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(f, line) || line != "lanegnn checkpoint v1") {
    throw ParseError(path + ": not a recognized checkpoint (bad header)");
  }
  std::map<std::string, std::string> meta;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind != "meta") break;  // metadata precedes the tensor blocks
    std::string key;
    ss >> key;
    std::string value;
    std::getline(ss, value);
    if (!value.empty() && value.front() == ' ') value.erase(value.begin());
    meta[key] = value;
  }
  return meta;
}

AdamOptimizer::AdamOptimizer(const ParameterStore& store, double beta1,
                             double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.resize(store.count());
  v_.resize(store.count());
  for (int i = 0; i < store.count(); ++i) {
    m_[i].assign(store.value(i).data.size(), 0.0);
    v_[i].assign(store.value(i).data.size(), 0.0);
  }
}

void AdamOptimizer::step(ParameterStore& store, double lr) {
  if (static_cast<int>(m_.size()) != store.count()) {
    throw std::logic_error("AdamOptimizer::step: store layout changed");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (int i = 0; i < store.count(); ++i) {
    auto& value = store.value(i).data;
    const auto& grad = store.grad(i).data;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      value[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace lanegnn
