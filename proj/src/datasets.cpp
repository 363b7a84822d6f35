#include "uwgan/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "checks.hpp"
#include "uwgan/errors.hpp"
#include "uwgan/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace uwgan {

namespace {

constexpr std::array<char, 8> kPhysicsMagic = {'U', 'W', 'P', 'H', 'Y', 'S', '0', '1'};

json rgb_json(const Rgb& v) { return json::array({v[0], v[1], v[2]}); }

Rgb rgb_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

void write_text_atomic(const fs::path& path, const std::string& text) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

}  // namespace

void RgbdSample::validate() const {
  detail::require_chw(image, "rgbd image");
  if (!depth.defined() || depth.dim() != 2 || depth.size(0) != image.size(1) ||
      depth.size(1) != image.size(2)) {
    throw ValidationError("rgbd sample '" + id + "': depth does not match image size");
  }
  const auto bad = torch::logical_or(depth.lt(0.0), depth.isfinite().logical_not())
                       .sum()
                       .item<int64_t>();
  if (bad > 0) {
    throw ValidationError("rgbd sample '" + id + "': " + std::to_string(bad) +
                          " invalid depth pixels");
  }
}

void WaterTypeSpec::validate() const {
  for (int c = 0; c < 3; ++c) {
    const double nlo = nrer_base[c];
    const double nhi = nrer_base[c] + nrer_span[c];
    const double blo = bg_base[c];
    const double bhi = bg_base[c] + bg_span[c];
    if (!(nlo > 0.0 && nrer_span[c] >= 0.0 && nhi <= 1.0 + 1e-12)) {
      throw ValidationError(std::string("water type ") + type_id + ": nrer range invalid");
    }
    if (!(blo >= 0.0 && bg_span[c] >= 0.0 && bhi <= 1.0 + 1e-12)) {
      throw ValidationError(std::string("water type ") + type_id + ": background range invalid");
    }
  }
}

WaterTypeSpec water_type(char type_id) {
  switch (type_id) {
    case 'b':
      return {'b', {0.79, 0.92, 0.94}, {0.06, 0.06, 0.05}, {0.05, 0.60, 0.70}, {0.15, 0.30, 0.29}};
    case 'c':
      return {'c', {0.71, 0.82, 0.80}, {0.04, 0.06, 0.07}, {0.05, 0.60, 0.70}, {0.15, 0.30, 0.29}};
    case 'd':
      return {'d', {0.67, 0.73, 0.67}, {0.0, 0.0, 0.0}, {0.15, 0.80, 0.70}, {0.0, 0.0, 0.0}};
    default:
      throw ValidationError(std::string("unknown water type '") + type_id + "'");
  }
}

std::vector<WaterTypeSpec> standard_water_types() {
  return {water_type('b'), water_type('c'), water_type('d')};
}

uint64_t derive_seed(uint64_t seed, std::string_view id) {
  uint64_t h = 1469598103934665603ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xffU;
    h *= 1099511628211ULL;
  }
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

DegradationParams sample_params(const WaterTypeSpec& spec, const UniformSource& rand,
                                double depth_scale) {
  spec.validate();
  DegradationParams p;
  for (int c = 0; c < 3; ++c) {
    p.nrer[c] = spec.nrer_base[c] + spec.nrer_span[c] * rand();
  }
  for (int c = 0; c < 3; ++c) {
    p.background[c] = spec.bg_base[c] + spec.bg_span[c] * rand();
  }
  p.depth_scale = depth_scale;
  p.validate();
  return p;
}

std::string to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw ValidationError("unknown split '" + s + "'");
}

SyntheticQuad synthesize_quad(const RgbdSample& sample, const WaterTypeSpec& spec,
                              const UniformSource& rand, const SynthesisOptions& options,
                              uint64_t seed) {
  sample.validate();
  auto image = sample.image.to(torch::kFloat32);
  auto depth = sample.depth.to(torch::kFloat32);
  if (options.split == Split::Train) {
    image = resize_bilinear(image, options.train_resolution, options.train_resolution);
    depth = resize_nearest(depth, options.train_resolution, options.train_resolution);
  }
  if (options.depth_normalization) {
    const auto& n = *options.depth_normalization;
    if (!(n.max_raw > 0.0) || !(n.range > 0.0)) {
      throw ValidationError("depth normalization needs positive max_raw and range");
    }
    depth = (depth / n.max_raw).clamp(0.0, 1.0) * n.range;
  }
  // The stored ground truth is 8-bit; synthesize from exactly what is stored.
  auto ground_truth = quantize_8bit(image);
  const auto params = sample_params(spec, rand, options.depth_scale);
  auto t = compute_transmission(depth, params);
  auto rendered = degrade(ground_truth, t, params.background);
  return SyntheticQuad{rendered.pixels,
                       ground_truth,
                       std::move(t),
                       params.background,
                       QuadProvenance{sample.id, spec.type_id, params, seed},
                       rendered.out_of_range};
}

double quad_consistency_error(const SyntheticQuad& quad) {
  auto again = degrade(quad.ground_truth, quad.transmission, quad.background);
  return (again.pixels.to(torch::kFloat64) - quad.underwater.to(torch::kFloat64))
      .abs()
      .max()
      .item<double>();
}

// ---------------------------------------------------------------------------

json DatasetManifest::to_json() const {
  json recs = json::array();
  for (const auto& r : records) {
    recs.push_back({
        {"id", r.id},
        {"split", to_string(r.split)},
        {"underwater", r.underwater_path},
        {"ground_truth", r.ground_truth_path},
        {"physics", r.physics_path},
        {"height", r.height},
        {"width", r.width},
        {"out_of_range", r.out_of_range},
        {"source_id", r.provenance.source_id},
        {"type_id", std::string(1, r.provenance.type_id)},
        {"nrer", rgb_json(r.provenance.params.nrer)},
        {"background", rgb_json(r.provenance.params.background)},
        {"depth_scale", r.provenance.params.depth_scale},
        {"seed", r.provenance.seed},
    });
  }
  json skipped_j = json::array();
  for (const auto& s : skipped) {
    skipped_j.push_back({{"stem", s.stem}, {"reason", s.reason}});
  }
  return {{"format", kFormat},
          {"seed", seed},
          {"train_resolution", train_resolution},
          {"records", recs},
          {"skipped", skipped_j}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
  if (j.value("format", "") != kFormat) {
    throw ValidationError("not a dataset manifest (format tag mismatch)");
  }
  DatasetManifest m;
  m.seed = j.at("seed").get<uint64_t>();
  m.train_resolution = j.at("train_resolution").get<int64_t>();
  for (const auto& r : j.at("records")) {
    ManifestRecord rec;
    rec.id = r.at("id").get<std::string>();
    rec.split = split_from_string(r.at("split").get<std::string>());
    rec.underwater_path = r.at("underwater").get<std::string>();
    rec.ground_truth_path = r.at("ground_truth").get<std::string>();
    rec.physics_path = r.at("physics").get<std::string>();
    rec.height = r.at("height").get<int64_t>();
    rec.width = r.at("width").get<int64_t>();
    rec.out_of_range = r.value("out_of_range", int64_t{0});
    rec.provenance.source_id = r.at("source_id").get<std::string>();
    rec.provenance.type_id = r.at("type_id").get<std::string>().at(0);
    rec.provenance.params.nrer = rgb_from(r.at("nrer"));
    rec.provenance.params.background = rgb_from(r.at("background"));
    rec.provenance.params.depth_scale = r.at("depth_scale").get<double>();
    rec.provenance.seed = r.at("seed").get<uint64_t>();
    m.records.push_back(std::move(rec));
  }
  for (const auto& s : j.value("skipped", json::array())) {
    m.skipped.push_back({s.at("stem").get<std::string>(), s.at("reason").get<std::string>()});
  }
  return m;
}

void DatasetManifest::save(const fs::path& path) const {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  write_text_atomic(path, to_json().dump(2) + "\n");
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open manifest: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("malformed manifest " + path.string() + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    throw ValidationError("malformed manifest " + path.string() + ": " + e.what());
  }
}

void DatasetManifest::validate(const fs::path& root) const {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) {
      throw ValidationError("duplicate quad id '" + r.id + "'");
    }
    const auto q = load_quad(r, root);
    if (q.underwater.size(1) != r.height || q.underwater.size(2) != r.width) {
      throw ValidationError("quad '" + r.id + "' size disagrees with manifest");
    }
  }
}

std::vector<const ManifestRecord*> DatasetManifest::by_split(Split split) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

void save_physics_blob(const fs::path& path, const TransmissionMap& t, const Rgb& background) {
  auto values = t.values().detach().to(torch::kFloat32).contiguous();
  const auto h = static_cast<int32_t>(values.size(1));
  const auto w = static_cast<int32_t>(values.size(2));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(kPhysicsMagic.data(), kPhysicsMagic.size());
  out.write(reinterpret_cast<const char*>(&h), sizeof h);
  out.write(reinterpret_cast<const char*>(&w), sizeof w);
  for (double b : background) {
    const auto f = static_cast<float>(b);
    out.write(reinterpret_cast<const char*>(&f), sizeof f);
  }
  out.write(reinterpret_cast<const char*>(values.data_ptr<float>()),
            static_cast<std::streamsize>(sizeof(float) * values.numel()));
  if (!out) {
    throw IoError("cannot write physics blob: " + path.string());
  }
}

std::pair<TransmissionMap, Rgb> load_physics_blob(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open physics blob: " + path.string());
  }
  std::array<char, 8> magic{};
  int32_t h = 0;
  int32_t w = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&h), sizeof h);
  in.read(reinterpret_cast<char*>(&w), sizeof w);
  if (!in || magic != kPhysicsMagic || h <= 0 || w <= 0) {
    throw IoError("bad physics blob header: " + path.string());
  }
  std::array<float, 3> bg{};
  in.read(reinterpret_cast<char*>(bg.data()), sizeof(float) * 3);
  auto t = torch::empty({3, h, w}, torch::kFloat32);
  in.read(reinterpret_cast<char*>(t.data_ptr<float>()),
          static_cast<std::streamsize>(sizeof(float) * t.numel()));
  if (!in) {
    throw IoError("truncated physics blob: " + path.string());
  }
  return {TransmissionMap(t), Rgb{bg[0], bg[1], bg[2]}};
}

QuadTensors load_quad(const ManifestRecord& record, const fs::path& root) {
  QuadTensors q;
  q.id = record.id;
  q.underwater = load_rgb(root / record.underwater_path);
  q.ground_truth = load_rgb(root / record.ground_truth_path);
  auto [t, b] = load_physics_blob(root / record.physics_path);
  if (q.underwater.sizes() != q.ground_truth.sizes() ||
      q.underwater.sizes() != t.values().sizes()) {
    throw ValidationError("quad '" + record.id + "' fields disagree in size");
  }
  q.transmission = t.values();
  q.background = torch::tensor({static_cast<float>(b[0]), static_cast<float>(b[1]),
                                static_cast<float>(b[2])});
  return q;
}

std::vector<int64_t> allocate_counts(int64_t count, const std::vector<double>& weights) {
  if (weights.empty()) {
    throw ValidationError("mixture needs at least one weight");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || std::any_of(weights.begin(), weights.end(), [](double w) { return w < 0.0; })) {
    throw ValidationError("mixture weights must be nonnegative with a positive sum");
  }
  std::vector<int64_t> counts(weights.size());
  std::vector<std::pair<double, size_t>> remainders;
  int64_t assigned = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(count) * weights[i] / total;
    counts[i] = static_cast<int64_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t k = 0; assigned < count; ++k, ++assigned) {
    ++counts[remainders[k % remainders.size()].second];
  }
  return counts;
}

std::vector<std::string> list_corpus(const fs::path& corpus) {
  const auto rgb_dir = corpus / "rgb";
  if (!fs::is_directory(rgb_dir)) {
    throw IoError("corpus has no rgb/ directory: " + corpus.string());
  }
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(rgb_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

RgbdSample load_rgbd(const fs::path& corpus, const std::string& stem) {
  RgbdSample s;
  s.id = stem;
  s.image = load_rgb(corpus / "rgb" / (stem + ".png"));
  const auto png = corpus / "depth" / (stem + ".png");
  const auto bin = corpus / "depth" / (stem + ".bin");
  if (fs::exists(png)) {
    s.depth = load_depth(png);
  } else if (fs::exists(bin)) {
    s.depth = load_depth(bin);
  } else {
    throw IoError("no depth map for '" + stem + "'");
  }
  s.validate();
  return s;
}

DatasetManifest build_dataset(const fs::path& corpus, const fs::path& out_dir,
                              const BuildOptions& options) {
  if (!fs::is_directory(corpus)) {
    throw IoError("corpus directory not found: " + corpus.string());
  }
  if (options.count < 0) {
    throw ValidationError("count must be >= 0");
  }
  if (options.specs.empty()) {
    throw ValidationError("at least one water type is required");
  }
  if (options.test_fraction < 0.0 || options.test_fraction > 1.0) {
    throw ValidationError("test_fraction must lie in [0, 1]");
  }
  for (const auto& s : options.specs) s.validate();
  auto weights = options.mixture;
  if (weights.empty()) weights.assign(options.specs.size(), 1.0);
  if (weights.size() != options.specs.size()) {
    throw ValidationError("mixture has " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(options.specs.size()) + " water types");
  }
  const auto counts = allocate_counts(options.count, weights);
  const auto stems = list_corpus(corpus);

  DatasetManifest manifest;
  manifest.seed = options.seed;
  manifest.train_resolution = options.train_resolution;
  fs::create_directories(out_dir);
  if (options.count == 0) {
    manifest.save(out_dir / "manifest.json");
    return manifest;
  }

  // Decode every source up front so failures are reported, not dropped.
  std::vector<RgbdSample> sources;
  for (const auto& stem : stems) {
    try {
      sources.push_back(load_rgbd(corpus, stem));
    } catch (const std::exception& e) {
      manifest.skipped.push_back({stem, e.what()});
      std::cerr << "warning: skipping source '" << stem << "': " << e.what() << "\n";
    }
  }
  if (sources.empty()) {
    throw IoError("no usable RGB-D samples in " + corpus.string());
  }

  // Test scenes are picked by a seeded shuffle of source ids.
  std::vector<size_t> order(sources.size());
  std::iota(order.begin(), order.end(), 0);
  SeededUniform split_rng(derive_seed(options.seed, "split"));
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[split_rng.next_u64() % i]);
  }
  const auto n_test = static_cast<size_t>(
      std::llround(options.test_fraction * static_cast<double>(sources.size())));
  std::vector<Split> split_of(sources.size(), Split::Train);
  for (size_t i = 0; i < n_test; ++i) split_of[order[i]] = Split::Test;

  size_t global = 0;
  for (size_t k = 0; k < options.specs.size(); ++k) {
    const auto& spec = options.specs[k];
    for (int64_t i = 0; i < counts[k]; ++i, ++global) {
      const size_t src = global % sources.size();
      const auto& sample = sources[src];
      std::ostringstream id;
      id << spec.type_id << "_" << std::setw(5) << std::setfill('0') << i << "_" << sample.id;
      const uint64_t seed = derive_seed(options.seed, id.str());
      SeededUniform rng(seed);
      SynthesisOptions so;
      so.split = split_of[src];
      so.train_resolution = options.train_resolution;
      so.depth_normalization = options.depth_normalization;
      so.depth_scale = options.depth_scale;
      auto quad = synthesize_quad(sample, spec, std::ref(rng), so, seed);

      ManifestRecord rec;
      rec.id = id.str();
      rec.split = so.split;
      const auto sub = to_string(so.split);
      rec.underwater_path = sub + "/" + rec.id + "_y.png";
      rec.ground_truth_path = sub + "/" + rec.id + "_x.png";
      rec.physics_path = sub + "/" + rec.id + "_tb.bin";
      rec.height = quad.underwater.size(1);
      rec.width = quad.underwater.size(2);
      rec.out_of_range = quad.out_of_range;
      rec.provenance = quad.provenance;
      fs::create_directories(out_dir / sub);
      save_rgb_png(out_dir / rec.underwater_path, quad.underwater);
      save_rgb_png(out_dir / rec.ground_truth_path, quad.ground_truth);
      save_physics_blob(out_dir / rec.physics_path, quad.transmission, quad.background);
      manifest.records.push_back(std::move(rec));
    }
  }
  manifest.save(out_dir / "manifest.json");
  return manifest;
}

// ---------------------------------------------------------------------------

RealPool load_real_pool(const fs::path& dir, std::optional<int64_t> resize_to) {
  RealPool pool;
  if (!fs::is_directory(dir)) {
    throw IoError("real image directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      auto img = load_rgb(f);
      if (resize_to) img = resize_bilinear(img, *resize_to, *resize_to);
      pool.images.push_back(img.clamp(0.0, 1.0));
      pool.names.push_back(f.filename().string());
    } catch (const std::exception& e) {
      pool.warnings.push_back(f.filename().string() + ": " + e.what());
    }
  }
  return pool;
}

void require_pool(const RealPool& pool, bool domain_adaptation) {
  if (domain_adaptation && pool.images.empty()) {
    throw ValidationError("domain adaptation is enabled but the real-image pool is empty");
  }
}

}  // namespace uwgan
