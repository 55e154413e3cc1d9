#include "curec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace curec::checkpoint {

using nlohmann::json;

namespace {

constexpr const char* kMagic = "curec-ckpt";
constexpr int kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written little-endian without byte swapping");

struct NamedArray {
  std::string name;
  const double* data;
  std::size_t size;
};

// Trainable parameters in their fixed order, then the non-trainable task
// means. The order is part of the format.
std::vector<NamedArray> arrays(model::ModelState& m) {
  std::vector<NamedArray> out;
  for (const auto& p : model::parameters(m)) out.push_back({p.name, p.data, p.size});
  for (const auto& [k, mean] : m.task_means)
    out.push_back({"task_mean." + std::to_string(k), mean.data(), mean.size()});
  return out;
}

}  // namespace

void save(const model::ModelState& m, std::uint64_t seed, const std::string& path) {
  auto& mm = const_cast<model::ModelState&>(m);  // parameters() needs mutable access
  auto named = arrays(mm);

  json header;
  header["magic"] = kMagic;
  header["version"] = kVersion;
  header["seed"] = seed;
  header["num_items"] = m.num_items;
  json arch;
  arch["f"] = m.arch.f;
  arch["n"] = m.arch.n;
  arch["K"] = m.arch.K;
  arch["kernel_width"] = m.arch.kernel_width;
  arch["dilations"] = m.arch.dilations;
  arch["gate_scale"] = m.arch.gate_scale;
  arch["ln_eps"] = m.arch.ln_eps;
  arch["mask_per_conv"] = m.arch.mask_per_conv;
  header["arch"] = arch;
  json tasks = json::array();
  for (const auto& [id, head] : m.heads) {
    json t;
    t["id"] = id;
    t["is_profile"] = head.is_profile;
    t["head_cols"] = head.W.cols;
    tasks.push_back(t);
  }
  header["tasks"] = tasks;
  json params = json::array();
  for (const auto& a : named) {
    json p;
    p["name"] = a.name;
    p["size"] = a.size;
    params.push_back(p);
  }
  header["params"] = params;

  std::string htext = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open checkpoint for writing: " + path);
  std::uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& a : named)
    out.write(reinterpret_cast<const char*>(a.data),
              static_cast<std::streamsize>(a.size * sizeof(double)));
  if (!out) throw ParseError("short write while saving checkpoint: " + path);
}

Loaded load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen == 0 || hlen > (1u << 20))
    throw ParseError("corrupt checkpoint header length: " + path);
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw ParseError("truncated checkpoint header: " + path);

  json header = json::parse(htext, nullptr, false);
  if (header.is_discarded()) throw ParseError("checkpoint header is not valid JSON: " + path);
  if (header.value("magic", "") != kMagic)
    throw ParseError("not a checkpoint file: " + path);
  if (header.value("version", -1) != kVersion)
    throw ParseError("unsupported checkpoint version in " + path);

  Loaded result;
  result.seed = header.at("seed").get<std::uint64_t>();
  model::ModelState& m = result.model;
  const json& arch = header.at("arch");
  m.arch.f = arch.at("f").get<int>();
  m.arch.n = arch.at("n").get<int>();
  m.arch.K = arch.at("K").get<int>();
  m.arch.kernel_width = arch.at("kernel_width").get<int>();
  m.arch.dilations = arch.at("dilations").get<std::vector<int>>();
  m.arch.gate_scale = arch.at("gate_scale").get<double>();
  m.arch.ln_eps = arch.at("ln_eps").get<double>();
  m.arch.mask_per_conv = arch.at("mask_per_conv").get<bool>();
  m.arch.validate();
  m.num_items = header.at("num_items").get<scenario::ItemId>();

  int f = m.arch.f;
  m.item_emb = Mat(static_cast<int>(m.num_items) + 2, f);
  m.blocks.resize(static_cast<std::size_t>(m.arch.K));
  for (auto& b : m.blocks) {
    b.w1 = Mat(m.arch.kernel_width * f, f);
    b.w2 = Mat(m.arch.kernel_width * f, f);
    b.b1.assign(static_cast<std::size_t>(f), 0.0);
    b.b2.assign(static_cast<std::size_t>(f), 0.0);
    b.ln1_g.assign(static_cast<std::size_t>(f), 0.0);
    b.ln1_b.assign(static_cast<std::size_t>(f), 0.0);
    b.ln2_g.assign(static_cast<std::size_t>(f), 0.0);
    b.ln2_b.assign(static_cast<std::size_t>(f), 0.0);
  }
  for (const auto& t : header.at("tasks")) {
    int id = t.at("id").get<int>();
    bool is_profile = t.at("is_profile").get<bool>();
    int cols = t.at("head_cols").get<int>();
    m.mask_emb[id] = Mat(m.arch.mask_rows(), f);
    model::TaskHead head;
    head.W = Mat(f, cols);
    head.b.assign(static_cast<std::size_t>(cols), 0.0);
    head.is_profile = is_profile;
    m.heads[id] = std::move(head);
  }

  // Pre-size task means from the header so arrays() covers them.
  for (const auto& p : header.at("params")) {
    std::string name = p.at("name").get<std::string>();
    if (name.rfind("task_mean.", 0) == 0)
      m.task_means[std::stoi(name.substr(10))] = Vec(static_cast<std::size_t>(f), 0.0);
  }

  auto named = arrays(m);
  const json& params = header.at("params");
  if (params.size() != named.size())
    throw ParseError("checkpoint parameter list does not match the declared model shape");
  for (std::size_t i = 0; i < named.size(); ++i) {
    const json& p = params[i];
    if (p.at("name").get<std::string>() != named[i].name ||
        p.at("size").get<std::size_t>() != named[i].size)
      throw ParseError("checkpoint shape mismatch at parameter " +
                       p.at("name").get<std::string>());
    in.read(reinterpret_cast<char*>(const_cast<double*>(named[i].data)),
            static_cast<std::streamsize>(named[i].size * sizeof(double)));
    if (!in) throw ParseError("truncated checkpoint payload at " + named[i].name);
  }
  char extra;
  if (in.read(&extra, 1)) throw ParseError("trailing bytes after checkpoint payload: " + path);
  return result;
}

}  // namespace curec::checkpoint
