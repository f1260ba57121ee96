#include "impulse/artifacts.hpp"

#include <cstdio>
#include <fstream>

#ifndef IMPULSE_VERSION
#define IMPULSE_VERSION "0.0.0"
#endif

namespace impulse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormatName = "impulse-value-function";

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_array(std::ostream& out, const std::vector<double>& v) {
  put_u64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw ValidationError("missing value dump " + path.string());
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    if (!in_.read(reinterpret_cast<char*>(&v), sizeof v)) fail();
    return v;
  }

  std::vector<double> array(std::uint64_t limit = std::uint64_t{1} << 32) {
    const auto n = u64();
    if (n > limit) fail();
    std::vector<double> v(n);
    if (!in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
      fail();
    }
    return v;
  }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) fail();
  }

 private:
  [[noreturn]] void fail() const { throw ValidationError("truncated or corrupt value dump " + path_.string()); }
  fs::path path_;
  std::ifstream in_;
};

}  // namespace

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string code_version() { return IMPULSE_VERSION; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << text;
  if (!out) throw RuntimeFailure("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing artifact " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("artifact " + path.string() + " is not valid JSON: " + e.what());
  }
}

void save_value_functions(const fs::path& dir, const std::vector<ValueFunction>& iterates) {
  if (iterates.empty()) throw ValidationError("no value iterates to save");
  const auto& v0 = iterates.front();
  const fs::path vdir = dir / "values";
  fs::create_directories(vdir);
  json header = {{"format", kFormatName},
                 {"version", kValueFormatVersion},
                 {"backend", to_string(v0.backend)},
                 {"dt", v0.dt},
                 {"n_steps", v0.n_steps},
                 {"dim", v0.dim},
                 {"iterates", iterates.size()}};
  if (v0.backend == Backend::Regression) {
    header["basis"] = {{"kind", "polynomial_total_degree"}, {"degree", v0.basis->degree()}};
  } else {
    header["grid_kind"] = to_string(v0.grid_kind);
    if (v0.grid_kind == GridKind::Tensor) {
      header["grid"] = {{"half_width", v0.tensor->half_width()},
                        {"points_per_axis", v0.tensor->points_per_axis()}};
    } else {
      std::ofstream out(vdir / "support.bin", std::ios::binary);
      put_u64(out, v0.reachable->steps());
      for (std::size_t s = 0; s < v0.reachable->steps(); ++s) {
        const auto& step = v0.reachable->step(s);
        put_u64(out, step.arrivals);
        std::vector<double> flat;
        for (const auto& p : step.support) {
          for (int j = 0; j < p.dim(); ++j) flat.push_back(p.lags[j]);
        }
        put_array(out, flat);
      }
      if (!out) throw RuntimeFailure("cannot write " + (vdir / "support.bin").string());
    }
  }
  write_json(vdir / "header.json", header);
  for (const auto& vf : iterates) {
    const fs::path file = vdir / ("k" + std::to_string(vf.k) + ".bin");
    std::ofstream out(file, std::ios::binary);
    put_u64(out, vf.n_steps);
    for (std::size_t s = 0; s < vf.n_steps; ++s) {
      put_array(out, vf.values[s]);
      put_array(out, vf.continuation[s]);
    }
    if (!out) throw RuntimeFailure("cannot write " + file.string());
  }
}

std::vector<ValueFunction> load_value_functions(const fs::path& dir, const ProblemSpec& spec) {
  const fs::path vdir = dir / "values";
  const json header = read_json(vdir / "header.json");
  try {
    if (header.at("format") != kFormatName) throw ValidationError("not a value function dump");
    if (header.at("version") != kValueFormatVersion) {
      throw ValidationError("unsupported value dump version " + header.at("version").dump());
    }
    ValueFunction proto;
    const auto backend = header.at("backend").get<std::string>();
    proto.backend = backend == "regression" ? Backend::Regression : Backend::Grid;
    proto.dt = header.at("dt").get<double>();
    proto.n_steps = header.at("n_steps").get<std::size_t>();
    proto.dim = header.at("dim").get<int>();
    const auto count = header.at("iterates").get<std::size_t>();
    if (proto.backend == Backend::Regression) {
      proto.basis = std::make_shared<PolynomialBasis>(proto.dim, header.at("basis").at("degree").get<int>());
    } else {
      proto.grid_kind =
          header.at("grid_kind").get<std::string>() == "reachable" ? GridKind::Reachable : GridKind::Tensor;
      if (proto.grid_kind == GridKind::Tensor) {
        proto.tensor = std::make_shared<TensorGrid>(proto.dim, header.at("grid").at("half_width").get<double>(),
                                                    header.at("grid").at("points_per_axis").get<int>());
      } else {
        Reader r(vdir / "support.bin");
        auto sets = std::make_shared<ReachableSets>();
        const auto steps = r.u64();
        if (steps != proto.n_steps) throw ValidationError("support.bin does not match header.json");
        for (std::uint64_t s = 0; s < steps; ++s) {
          const auto arrivals = r.u64();
          const auto flat = r.array();
          if (flat.size() % static_cast<std::size_t>(proto.dim) != 0) {
            throw ValidationError("support.bin has a malformed point set");
          }
          std::vector<AugmentedState> support;
          for (std::size_t i = 0; i < flat.size(); i += static_cast<std::size_t>(proto.dim)) {
            LagVector lags(proto.dim);
            for (int j = 0; j < proto.dim; ++j) lags[j] = flat[i + static_cast<std::size_t>(j)];
            support.emplace_back(std::move(lags));
          }
          sets->add_step(std::move(support), arrivals);
        }
        r.expect_end();
        proto.reachable = std::move(sets);
      }
    }
    const auto g = spec.terminal_reward;
    proto.terminal = [g](const AugmentedState& s) {
      Vector x(1);
      x[0] = s.head();
      return g(x);
    };
    std::vector<ValueFunction> out;
    for (std::size_t k = 0; k < count; ++k) {
      ValueFunction vf = proto;
      vf.k = k;
      Reader r(vdir / ("k" + std::to_string(k) + ".bin"));
      if (r.u64() != proto.n_steps) throw ValidationError("value dump k" + std::to_string(k) + " has the wrong step count");
      vf.values.resize(proto.n_steps);
      vf.continuation.resize(proto.n_steps);
      for (std::size_t s = 0; s < proto.n_steps; ++s) {
        vf.values[s] = r.array();
        vf.continuation[s] = r.array();
      }
      r.expect_end();
      out.push_back(std::move(vf));
    }
    return out;
  } catch (const json::exception& e) {
    throw ValidationError("malformed value dump header: " + std::string(e.what()));
  }
}

}  // namespace impulse
