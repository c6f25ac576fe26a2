#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tubular/duct.hpp"
#include "tubular/edt.hpp"
#include "tubular/error.hpp"
#include "tubular/loss.hpp"
#include "tubular/metrics.hpp"
#include "tubular/phantom.hpp"
#include "tubular/preprocess.hpp"
#include "tubular/refine.hpp"
#include "tubular/volume_io.hpp"

namespace tubular::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Nested objects are subcommand sections: {"threads":4,"refine":{"tp":0.9}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      std::vector<std::string> values = opt->as<std::vector<std::string>>();
      if (values.empty() && default_also && !opt->get_default_str().empty()) {
        values.push_back(opt->get_default_str());
      }
      if (values.empty()) continue;
      const std::string& name = opt->get_lnames().front();
      j[name] = values.size() == 1 ? json(values.front()) : json(values);
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed config file: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        std::vector<std::string> inner = parents;
        inner.push_back(key);
        flatten(value, inner, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const json& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

std::string fixed(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

json dims_json(const Dims& d) { return json::array({d.x, d.y, d.z}); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

fs::path in_dir(const std::string& dir, const char* name) { return fs::path(dir) / name; }

std::size_t count(const LabelMap& m) { return count_foreground(m); }

ProbabilityField load_probability(const std::string& path) {
  ProbabilityField p = load_volume(path).to_double();
  for (double v : p.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(path + ": probabilities must lie in [0, 1]");
  }
  return p;
}

ScaleProbabilityField load_scale_field(const std::string& path) {
  return ScaleProbabilityField::from_channels(load_channels(path));
}

Grid<std::int16_t> load_integer_grid(const std::string& path) {
  const Volume v = load_volume(path);
  if (v.kind() == ScalarKind::i16) return v.as<std::int16_t>();
  const Grid<double> d = v.to_double();
  Grid<std::int16_t> out(d.geometry());
  for (std::size_t n = 0; n < d.size(); ++n) {
    if (d[n] != std::round(d[n]) || d[n] < -32768.0 || d[n] > 32767.0) {
      throw ValidationError(path + ": expected integer values");
    }
    out[n] = static_cast<std::int16_t>(d[n]);
  }
  return out;
}

Grid<float> to_float(const Grid<double>& d) {
  Grid<float> out(d.geometry());
  for (std::size_t n = 0; n < d.size(); ++n) out[n] = static_cast<float>(d[n]);
  return out;
}

GarParams gar_params(const RunConfig& c) {
  GarParams params;
  params.skeleton_threshold = c.skeleton_threshold;
  params.refine_threshold = c.refine_threshold;
  params.truncation = c.truncation;
  params.validate();
  return params;
}

SynthOptions synth_options(const RunConfig& c) {
  SynthOptions o;
  o.boundary_noise = c.boundary_noise;
  o.flip_rate = c.flip_rate;
  o.bins = c.bins;
  o.scale_blur = c.scale_blur;
  o.balanced = !c.unbalanced;
  o.seed = c.seed;
  return o;
}

double msd_or_nan(const LabelMap& a, const LabelMap& b, unsigned threads) {
  if (count(a) == 0 || count(b) == 0) return std::nan("");
  return mean_surface_distance(a, b, threads);
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string("missing required input ") + flag);
}

PhantomSpec read_phantom_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open phantom spec " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return PhantomSpec::from_json(buf.str());
}

void cmd_preprocess(const RunConfig& c, std::ostream& out) {
  require(c.ct, "--ct");
  require(c.out, "--out");
  if (!(c.hu_lo < c.hu_hi)) throw ValidationError("HU window requires --hu-lo < --hu-hi");
  Volume ct = load_volume(c.ct);
  if (!c.center.empty()) {
    if (c.center.size() != 3) throw ValidationError("--center needs three coordinates");
    ct = crop_region(ct, {c.center[0], c.center[1], c.center[2]}, c.edge);
  }
  const Grid<float> normalized = preprocess_ct(ct, {c.hu_lo, c.hu_hi});
  save_volume(normalized, c.out);
  out << json{{"dims", dims_json(normalized.dims())}, {"hu_lo", c.hu_lo}, {"hu_hi", c.hu_hi}}.dump() << "\n";
}

void cmd_edt(const RunConfig& c, std::ostream& out) {
  require(c.label, "--label");
  require(c.out, "--out");
  if (c.units != "voxel" && c.units != "mm") throw ValidationError("--units must be voxel or mm");
  const LabelMap label = load_label_map(c.label);
  const DistanceMap d =
      distance_transform(label, c.units == "mm" ? DistanceUnits::mm : DistanceUnits::voxel, c.threads);
  save_volume(d.values, c.out);
  float max_d = 0.0f;
  for (float v : d.values.values()) max_d = std::max(max_d, v);
  out << json{{"foreground", count(label)},
              {"surface", surface_voxels(label).size()},
              {"units", c.units},
              {"max_distance", max_d}}
             .dump()
      << "\n";
}

void cmd_quantize(const RunConfig& c, std::ostream& out) {
  require(c.out, "--out");
  if (c.label.empty() == c.distance.empty()) {
    throw ValidationError("quantize needs exactly one of --label or --distance");
  }
  DistanceMap d;
  if (!c.label.empty()) {
    d = distance_transform(load_label_map(c.label), DistanceUnits::voxel, c.threads);
  } else {
    d.values = to_float(load_volume(c.distance).to_double());
  }
  if (c.bins < 0) throw ValidationError("K (--bins) must be >= 1, or 0 for automatic");
  const int bins = c.bins > 0 ? c.bins : std::max(1, max_scale_class(d));
  const ScaleClassMap z = quantize(d, bins);
  save_volume(z.classes, c.out);
  out << json{{"bins", bins}, {"max_class_unclamped", max_scale_class(d)}}.dump() << "\n";
}

void cmd_loss_eval(const RunConfig& c, std::ostream& out) {
  require(c.p, "--p");
  require(c.g, "--g");
  require(c.label, "--label");
  const ProbabilityField p = load_probability(c.p);
  const ScaleProbabilityField g = load_scale_field(c.g);
  const LabelMap label = load_label_map(c.label);
  require_same_dims(p.geometry(), label.geometry(), "loss-eval p/label");
  ScaleClassMap z;
  if (!c.z.empty()) {
    z.classes = load_integer_grid(c.z);
    z.bins = g.bins();
  } else {
    z = quantize(distance_transform(label, DistanceUnits::voxel, c.threads), g.bins());
  }
  const LossBreakdown b = total_loss(p, g, label, z, c.lambda);
  out << json{{"cls", b.cls},
              {"dis", b.dis},
              {"total", b.total},
              {"lambda", c.lambda},
              {"beta_positive", b.beta_positive},
              {"beta_negative", b.beta_negative}}
             .dump(2)
      << "\n";
}

void cmd_refine(const RunConfig& c, std::ostream& out) {
  require(c.p, "--p");
  require(c.g, "--g");
  require(c.out_dir, "--out-dir");
  const GarParams params = gar_params(c);
  const ProbabilityField p = load_probability(c.p);
  const ScaleProbabilityField g = load_scale_field(c.g);
  const GarResult r = gar_pipeline(p, g, params, c.threads);
  ensure_dir(c.out_dir);
  save_volume(r.mask, in_dir(c.out_dir, "mask.json"));
  save_volume(r.skeleton.mask, in_dir(c.out_dir, "skeleton.json"));
  save_volume(r.scales, in_dir(c.out_dir, "scale.json"));
  save_volume(to_float(r.refined.values), in_dir(c.out_dir, "soft.json"));
  int max_scale = 0;
  for (std::size_t n = 0; n < r.scales.size(); ++n) {
    if (r.skeleton.mask[n]) max_scale = std::max<int>(max_scale, r.scales[n]);
  }
  out << json{{"tp", params.skeleton_threshold},
              {"tr", params.refine_threshold},
              {"trunc_sigma", params.truncation},
              {"mask_voxels", count(r.mask)},
              {"skeleton_voxels", count(r.skeleton.mask)},
              {"max_scale", max_scale}}
             .dump(2)
      << "\n";
}

void cmd_metrics(const RunConfig& c, std::ostream& out) {
  std::vector<std::array<std::string, 3>> rows;
  if (!c.cases.empty()) {
    std::ifstream in(c.cases);
    if (!in) throw IoError("cannot open case list " + c.cases);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      std::array<std::string, 3> row;
      std::stringstream fields(line);
      for (auto& f : row) {
        if (!std::getline(fields, f, ',')) throw ValidationError("case list rows need id,pred,truth: " + line);
      }
      rows.push_back(row);
    }
  } else {
    require(c.pred, "--pred");
    require(c.truth, "--truth");
    rows.push_back({c.case_id, c.pred, c.truth});
  }
  out << "case,dsc,msd_mm\n";
  for (const auto& [id, pred_path, truth_path] : rows) {
    const LabelMap pred = load_label_map(pred_path);
    const LabelMap truth = load_label_map(truth_path);
    require_same_dims(pred.geometry(), truth.geometry(), "metrics " + id);
    out << id << "," << fixed(dsc(pred, truth)) << "," << fixed(msd_or_nan(pred, truth, c.threads)) << "\n";
  }
}

void cmd_phantom(const RunConfig& c, std::ostream& out) {
  require(c.spec, "--spec");
  require(c.out_dir, "--out-dir");
  const Phantom ph = generate_phantom(read_phantom_spec(c.spec));
  const SynthFields f = synth_fields(ph, synth_options(c));
  ensure_dir(c.out_dir);
  save_volume(ph.label, in_dir(c.out_dir, "label.json"));
  save_volume(ph.skeleton_mask(), in_dir(c.out_dir, "skeleton.json"));
  save_volume(ph.radius_map(), in_dir(c.out_dir, "scale.json"));
  save_volume(f.z.classes, in_dir(c.out_dir, "z.json"));
  save_volume(to_float(f.p), in_dir(c.out_dir, "p.json"));
  save_channels(f.g.to_channels(), in_dir(c.out_dir, "g.json"));
  out << json{{"dims", dims_json(ph.label.dims())},
              {"foreground", count(ph.label)},
              {"skeleton_voxels", ph.skeleton.size()},
              {"bins", f.g.bins()},
              {"seed", c.seed}}
             .dump(2)
      << "\n";
}

void cmd_duct(const RunConfig& c, std::ostream& out) {
  require(c.mask, "--mask");
  require(c.scales, "--scales");
  DuctParams params;
  params.scale_threshold = c.scale_threshold;
  params.edge = c.edge;
  const LabelMap mask = load_label_map(c.mask);
  const ScaleMap scales = load_integer_grid(c.scales);
  LabelMap exclude;
  if (!c.exclude.empty()) exclude = load_label_map(c.exclude);
  const DuctFinding f = screen_duct(mask, scales, params, c.exclude.empty() ? nullptr : &exclude);
  json boxes = json::array();
  for (const Box& b : f.candidates) {
    boxes.push_back({{"origin", json::array({b.origin.i, b.origin.j, b.origin.k})}, {"edge", b.edge}});
  }
  out << json{{"dilated", f.dilated}, {"N", f.voxel_count}, {"max_scale", f.max_scale}, {"candidates", boxes}}
             .dump(2)
      << "\n";
}

void cmd_sweep(const RunConfig& c, std::ostream& out) {
  ProbabilityField p;
  ScaleProbabilityField g;
  LabelMap truth;
  if (!c.spec.empty()) {
    const Phantom ph = generate_phantom(read_phantom_spec(c.spec));
    SynthFields f = synth_fields(ph, synth_options(c));
    p = std::move(f.p);
    g = std::move(f.g);
    truth = ph.label;
  } else {
    require(c.p, "--p (or --spec)");
    require(c.g, "--g");
    require(c.truth, "--truth");
    p = load_probability(c.p);
    g = load_scale_field(c.g);
    truth = load_label_map(c.truth);
    require_same_dims(p.geometry(), truth.geometry(), "sweep p/truth");
  }
  if (c.tp_list.empty() || c.tr_list.empty()) throw ValidationError("sweep needs nonempty --tp-list and --tr-list");
  GarParams base;
  base.truncation = c.truncation;
  for (double tp : c.tp_list) {
    for (double tr : c.tr_list) {
      GarParams check = base;
      check.skeleton_threshold = tp;
      check.refine_threshold = tr;
      check.validate();
    }
  }
  out << "tp,tr,dsc,msd_mm\n";
  for (double tp : c.tp_list) {
    GarParams params = base;
    params.skeleton_threshold = tp;
    const GarResult r = gar_pipeline(p, g, params, c.threads);
    for (double tr : c.tr_list) {
      const LabelMap mask = binarize(r.refined, tr);
      out << compact(tp) << "," << compact(tr) << "," << fixed(dsc(mask, truth)) << ","
          << fixed(msd_or_nan(mask, truth, c.threads)) << "\n";
    }
  }
}

}  // namespace

std::string defaults_json() {
  const RunConfig d;
  json j = {{"tp", d.skeleton_threshold},
            {"tr", d.refine_threshold},
            {"lambda", d.lambda},
            {"ts", d.scale_threshold},
            {"edge", d.edge},
            {"hu_lo", d.hu_lo},
            {"hu_hi", d.hu_hi},
            {"trunc_sigma", d.truncation},
            {"bins", d.bins},
            {"seed", d.seed},
            {"threads", d.threads},
            {"tp_list", d.tp_list},
            {"tr_list", d.tr_list}};
  return j.dump(2) + "\n";
}

void execute(const RunConfig& c, std::ostream& out) {
  if (c.threads < 1) throw ValidationError("--threads must be >= 1");
  if (c.subcommand == "preprocess") return cmd_preprocess(c, out);
  if (c.subcommand == "edt") return cmd_edt(c, out);
  if (c.subcommand == "quantize") return cmd_quantize(c, out);
  if (c.subcommand == "loss-eval") return cmd_loss_eval(c, out);
  if (c.subcommand == "refine") return cmd_refine(c, out);
  if (c.subcommand == "metrics") return cmd_metrics(c, out);
  if (c.subcommand == "phantom") return cmd_phantom(c, out);
  if (c.subcommand == "duct-candidates") return cmd_duct(c, out);
  if (c.subcommand == "sweep") return cmd_sweep(c, out);
  throw ValidationError("unknown subcommand '" + c.subcommand + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Tubular-structure distance transform and refinement toolkit", "tubular"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file supplying option values (command-line flags take precedence)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(0, 1);
  app.fallthrough();
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print default parameters as JSON and exit");
  app.add_option("--threads", c.threads, "Worker threads")->capture_default_str();
  app.add_option("--seed", c.seed, "Seed for every random draw")->capture_default_str();

  auto* pre = app.add_subcommand("preprocess", "Window CT intensities and normalize, optionally cropping");
  pre->add_option("--ct", c.ct, "CT volume sidecar");
  pre->add_option("--out", c.out, "Output sidecar");
  pre->add_option("--hu-lo", c.hu_lo, "Lower HU bound")->capture_default_str();
  pre->add_option("--hu-hi", c.hu_hi, "Upper HU bound")->capture_default_str();
  pre->add_option("--center", c.center, "Crop centre x y z")->expected(3);
  pre->add_option("--edge", c.edge, "Crop cube side")->capture_default_str();

  auto* edt = app.add_subcommand("edt", "Distance from each foreground voxel to the object surface");
  edt->add_option("--label", c.label, "Binary label map");
  edt->add_option("--out", c.out, "Output f32 distance volume");
  edt->add_option("--units", c.units, "voxel or mm")->capture_default_str();

  auto* quant = app.add_subcommand("quantize", "Quantize surface distances into scale classes");
  quant->add_option("--label", c.label, "Binary label map");
  quant->add_option("--distance", c.distance, "Voxel-unit distance volume");
  quant->add_option("--bins", c.bins, "K (0: largest class present)")->capture_default_str();
  quant->add_option("--out", c.out, "Output i16 class volume");

  auto* loss = app.add_subcommand("loss-eval", "Evaluate the segmentation and scale-class losses");
  loss->add_option("--p", c.p, "Foreground probability volume");
  loss->add_option("--g", c.g, "K-channel scale probability volume");
  loss->add_option("--label", c.label, "Binary label map");
  loss->add_option("--z", c.z, "Scale class volume (default: quantized from --label)");
  loss->add_option("--lambda", c.lambda, "Weight of the scale penalty term")->capture_default_str();

  auto* refine = app.add_subcommand("refine", "Geometry-aware refinement of a probability map");
  refine->add_option("--p", c.p, "Foreground probability volume");
  refine->add_option("--g", c.g, "K-channel scale probability volume");
  refine->add_option("--out-dir", c.out_dir, "Directory for mask, skeleton, scale and soft volumes");
  refine->add_option("--tp", c.skeleton_threshold, "T^p, pseudo-skeleton threshold")->capture_default_str();
  refine->add_option("--tr", c.refine_threshold, "T^r, refinement threshold")->capture_default_str();
  refine->add_option("--trunc-sigma", c.truncation, "Kernel support in sigmas")->capture_default_str();

  auto* metrics = app.add_subcommand("metrics", "DSC and mean surface distance per case");
  metrics->add_option("--pred", c.pred, "Predicted label map");
  metrics->add_option("--truth", c.truth, "Reference label map");
  metrics->add_option("--id", c.case_id, "Case id for a single pair")->capture_default_str();
  metrics->add_option("--cases", c.cases, "CSV file of id,pred,truth rows");

  auto* phantom = app.add_subcommand("phantom", "Generate a tubular phantom and emulated network outputs");
  phantom->add_option("--spec", c.spec, "Phantom spec JSON");
  phantom->add_option("--out-dir", c.out_dir, "Output directory");

  auto* duct = app.add_subcommand("duct-candidates", "Dilation test and candidate regions");
  duct->add_option("--mask", c.mask, "Predicted duct mask");
  duct->add_option("--scales", c.scales, "Predicted scale volume");
  duct->add_option("--ts", c.scale_threshold, "T^s, dilation threshold")->capture_default_str();
  duct->add_option("--edge", c.edge, "Candidate cube side")->capture_default_str();
  duct->add_option("--exclude", c.exclude, "Mask whose voxels yield no candidate");

  auto* sweep = app.add_subcommand("sweep", "DSC and MSD over a grid of T^p and T^r");
  sweep->add_option("--spec", c.spec, "Phantom spec JSON (emulated outputs are synthesized)");
  sweep->add_option("--p", c.p, "Foreground probability volume");
  sweep->add_option("--g", c.g, "K-channel scale probability volume");
  sweep->add_option("--truth", c.truth, "Reference label map");
  sweep->add_option("--tp-list", c.tp_list, "T^p values")->capture_default_str();
  sweep->add_option("--tr-list", c.tr_list, "T^r values")->capture_default_str();
  sweep->add_option("--trunc-sigma", c.truncation, "Kernel support in sigmas")->capture_default_str();

  for (CLI::App* sub : {phantom, sweep}) {
    sub->add_option("--noise", c.boundary_noise, "Boundary jitter sigma_b (voxels)")->capture_default_str();
    sub->add_option("--flip", c.flip_rate, "Fraction of voxels replaced by uniform noise")->capture_default_str();
    sub->add_option("--bins", c.bins, "K (0: largest class present)")->capture_default_str();
    sub->add_option("--blur", c.scale_blur, "Scale probability moved to adjacent classes")->capture_default_str();
    sub->add_flag("--unbalanced", c.unbalanced, "Emit the unweighted posterior");
  }

  std::vector<std::string> storage = args;
  std::vector<char*> argv;
  std::string program = "tubular";
  argv.push_back(program.data());
  for (std::string& a : storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (print_defaults) {
      out << defaults_json();
      return 0;
    }
    const auto chosen = app.get_subcommands();
    if (chosen.empty()) throw ValidationError("a subcommand is required (see --help)");
    c.subcommand = chosen.front()->get_name();
    execute(c, out);
    return 0;
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tubular::cli
