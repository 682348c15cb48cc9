#include "spotter/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <type_traits>

#include "spotter/errors.hpp"

namespace spotter::config {

using nlohmann::json;

namespace {

// Strict reader over one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + name() + "' must be an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      // json would silently truncate 1.5 to 1
      if (!j_.at(key).is_number_integer()) throw ConfigError("config: '" + qualified(key) + "' must be an integer");
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: '" + qualified(key) + "' has the wrong type (" + e.what() + ")");
    }
  }

  void section(const std::string& key, const std::function<void(Section&)>& fn) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    Section sub(j_.at(key), qualified(key));
    fn(sub);
    sub.finish();
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!known_.count(k)) throw ConfigError("config: unknown key '" + qualified(k) + "'");
    }
  }

 private:
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string name() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

void read_profile(Section& s, data::SyntheticProfile& p) {
  s.get("width", p.width);
  s.get("height", p.height);
  s.get("min_words", p.min_words);
  s.get("max_words", p.max_words);
  s.get("min_word_len", p.min_word_len);
  s.get("max_word_len", p.max_word_len);
  s.get("alphabet", p.alphabet);
  s.get("min_font_scale", p.min_font_scale);
  s.get("max_font_scale", p.max_font_scale);
  s.get("thickness", p.thickness);
  s.get("max_rotation_deg", p.max_rotation_deg);
  s.get("curved_fraction", p.curved_fraction);
  s.get("dont_care_fraction", p.dont_care_fraction);
}

json profile_json(const data::SyntheticProfile& p) {
  return {{"width", p.width},
          {"height", p.height},
          {"min_words", p.min_words},
          {"max_words", p.max_words},
          {"min_word_len", p.min_word_len},
          {"max_word_len", p.max_word_len},
          {"alphabet", p.alphabet},
          {"min_font_scale", p.min_font_scale},
          {"max_font_scale", p.max_font_scale},
          {"thickness", p.thickness},
          {"max_rotation_deg", p.max_rotation_deg},
          {"curved_fraction", p.curved_fraction},
          {"dont_care_fraction", p.dont_care_fraction}};
}

}  // namespace

void RunConfig::validate() const {
  if (profile != "toy" && profile != "full") throw ConfigError("config: profile must be toy or full");
  if (device != "cpu" && device != "cuda") throw ConfigError("config: device must be cpu or cuda");
  if (threads < 1) throw ConfigError("config: threads must be >= 1");
  backbone.validate();
  detector.validate();
  if (detector.heads < 1) throw ConfigError("config: detector.heads must be >= 1");
  if (rc.heads < 1 || backbone.d_model % rc.heads != 0) throw ConfigError("config: rc.heads must divide d_model");
  if (rc.depth < 1) throw ConfigError("config: rc.depth must be >= 1");
  if (backbone.d_model % 4 != 0) throw ConfigError("config: backbone.d_model must be a multiple of 4");
  recognizer.model.validate(backbone.d_model);
  if (recognizer.train_roi != "predicted" && recognizer.train_roi != "gt") {
    throw ConfigError("config: recognizer.train_roi must be predicted or gt");
  }
  recognizer::Charset check(recognizer.alphabet);
  for (char c : data.synthetic.alphabet) {
    if (check.id(c) == recognizer::Charset::kUnk) {
      throw ConfigError(std::string("config: synthetic alphabet symbol '") + c + "' missing from recognizer.alphabet");
    }
  }
  if (mask.n_pca < 1 || mask.n_pca > 784) throw ConfigError("config: mask.n_pca must be in [1, 784]");
  loss.weights.validate();
  if (loss.recognition < 0) throw ConfigError("config: loss.recognition must be nonnegative");
  if (optimizer.lr <= 0) throw ConfigError("config: optimizer.lr must be positive");
  if (optimizer.schedule != "cosine" && optimizer.schedule != "step") {
    throw ConfigError("config: optimizer.schedule must be cosine or step");
  }
  if (optimizer.iterations < 1 || optimizer.batch_size < 1) {
    throw ConfigError("config: optimizer.iterations and batch_size must be >= 1");
  }
  if (data.input_width < 32 || data.input_height < 32) throw ConfigError("config: input size must be >= 32");
  if (data.train.empty() && data.num_train < 1) throw ConfigError("config: data.num_train must be >= 1");
  data.synthetic.validate();
  if (eval.score_threshold < 0 || eval.mask_threshold <= 0 || eval.mask_threshold >= 1) {
    throw ConfigError("config: eval thresholds out of range");
  }
  if (log.interval < 1 || log.checkpoint_interval < 1) throw ConfigError("config: log intervals must be >= 1");
}

RunConfig toy_profile() {
  RunConfig c;
  c.profile = "toy";
  c.recognizer.alphabet = "abc";
  // Toy words have at most 4 letters; 8 slots leave room for EOS and halve decoder cost.
  c.recognizer.model.max_len = 8;
  c.data.synthetic.alphabet = "abc";
  // Sized by measurement: the 20-image set is memorized well before 3000 iterations at this rate.
  c.optimizer.lr = 3e-4;
  c.optimizer.iterations = 3000;
  // Under the global clip the detection terms otherwise crowd out the recognition gradient.
  c.loss.recognition = 2.0;
  return c;
}

RunConfig full_profile() {
  RunConfig c;
  c.profile = "full";
  c.backbone.embed_dim = 96;
  c.backbone.depths = {2, 2, 6, 2};
  c.backbone.heads = {3, 6, 12, 24};
  c.backbone.window = 7;
  c.backbone.d_model = 256;
  c.detector = {100, 256, 6, 64, 8};
  c.rc.heads = 8;
  c.recognizer.model.heads = 8;
  c.optimizer.lr = 2.5e-5;
  c.optimizer.schedule = "step";
  c.optimizer.milestones = {380000, 420000};
  c.optimizer.iterations = 450000;
  c.optimizer.batch_size = 8;
  c.data.input_width = 640;
  c.data.input_height = 640;
  c.data.synthetic.width = 640;
  c.data.synthetic.height = 640;
  c.data.synthetic.min_words = 1;
  c.data.synthetic.max_words = 8;
  c.data.synthetic.min_word_len = 2;
  c.data.synthetic.max_word_len = 10;
  c.data.synthetic.alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  c.data.synthetic.min_font_scale = 1.0;
  c.data.synthetic.max_font_scale = 2.5;
  c.data.synthetic.max_rotation_deg = 60;
  c.data.synthetic.curved_fraction = 0.3;
  c.data.num_train = 10000;
  c.data.augment.enabled = true;
  c.log.checkpoint_interval = 5000;
  return c;
}

RunConfig from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  std::string profile = "toy";
  if (j.contains("profile")) {
    if (!j["profile"].is_string()) throw ConfigError("config: 'profile' must be a string");
    profile = j["profile"].get<std::string>();
  }
  RunConfig c;
  if (profile == "toy") {
    c = toy_profile();
  } else if (profile == "full") {
    c = full_profile();
  } else {
    throw ConfigError("config: unknown profile '" + profile + "'");
  }

  Section root(j, "");
  root.get("profile", c.profile);
  root.get("seed", c.seed);
  root.get("device", c.device);
  root.get("threads", c.threads);
  root.section("backbone", [&](Section& s) {
    s.get("type", c.backbone.type);
    s.get("patch_size", c.backbone.patch_size);
    s.get("depths", c.backbone.depths);
    s.get("heads", c.backbone.heads);
    s.get("window", c.backbone.window);
    s.get("embed_dim", c.backbone.embed_dim);
    s.get("d_model", c.backbone.d_model);
    s.get("dc_dilation", c.backbone.dc_dilation);
    s.get("dilated", c.backbone.dilated);
  });
  root.section("detector", [&](Section& s) {
    s.get("num_proposals", c.detector.num_proposals);
    s.get("dim", c.detector.dim);
    s.get("stages", c.detector.stages);
    s.get("dyn_dim", c.detector.dyn_dim);
    s.get("heads", c.detector.heads);
  });
  root.section("rc", [&](Section& s) {
    s.get("enabled", c.rc.enabled);
    s.get("heads", c.rc.heads);
    s.get("depth", c.rc.depth);
  });
  root.section("recognizer", [&](Section& s) {
    s.get("max_len", c.recognizer.model.max_len);
    s.get("window", c.recognizer.model.window);
    s.get("pool", c.recognizer.model.pool);
    s.get("depth", c.recognizer.model.depth);
    s.get("heads", c.recognizer.model.heads);
    s.get("alphabet", c.recognizer.alphabet);
    s.get("train_roi", c.recognizer.train_roi);
  });
  root.section("mask", [&](Section& s) {
    s.get("n_pca", c.mask.n_pca);
    s.get("basis_min_masks", c.mask.basis_min_masks);
  });
  root.section("loss", [&](Section& s) {
    s.get("cls", c.loss.weights.cls);
    s.get("l1", c.loss.weights.l1);
    s.get("giou", c.loss.weights.giou);
    s.get("mask", c.loss.weights.mask);
    s.get("recognition", c.loss.recognition);
    s.get("focal_alpha", c.loss.focal.alpha);
    s.get("focal_gamma", c.loss.focal.gamma);
  });
  root.section("optimizer", [&](Section& s) {
    s.get("lr", c.optimizer.lr);
    s.get("weight_decay", c.optimizer.weight_decay);
    s.get("schedule", c.optimizer.schedule);
    s.get("milestones", c.optimizer.milestones);
    s.get("gamma", c.optimizer.gamma);
    s.get("iterations", c.optimizer.iterations);
    s.get("warmup", c.optimizer.warmup);
    s.get("batch_size", c.optimizer.batch_size);
    s.get("grad_clip", c.optimizer.grad_clip);
  });
  root.section("data", [&](Section& s) {
    s.get("train", c.data.train);
    s.get("eval", c.data.eval);
    s.get("input_width", c.data.input_width);
    s.get("input_height", c.data.input_height);
    s.get("num_train", c.data.num_train);
    s.get("num_eval", c.data.num_eval);
    s.get("seed_offset", c.data.seed_offset);
    s.section("synthetic", [&](Section& p) { read_profile(p, c.data.synthetic); });
    s.section("augment", [&](Section& a) {
      a.get("enabled", c.data.augment.enabled);
      a.get("min_scale", c.data.augment.min_scale);
      a.get("max_scale", c.data.augment.max_scale);
      a.get("max_rotation_deg", c.data.augment.max_rotation_deg);
      a.get("max_shift", c.data.augment.max_shift);
      a.get("brightness", c.data.augment.brightness);
      a.get("contrast", c.data.augment.contrast);
    });
  });
  root.section("eval", [&](Section& s) {
    s.get("score_threshold", c.eval.score_threshold);
    s.get("mask_threshold", c.eval.mask_threshold);
    s.get("iou_threshold", c.eval.iou_threshold);
    s.get("ned_penalize_false_positives", c.eval.ned_penalize_false_positives);
    s.get("nms", c.eval.nms);
    s.get("nms_iou", c.eval.nms_iou);
  });
  root.section("log", [&](Section& s) {
    s.get("interval", c.log.interval);
    s.get("checkpoint_interval", c.log.checkpoint_interval);
  });
  root.finish();
  c.validate();
  return c;
}

RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json to_json(const RunConfig& c) {
  return {
      {"profile", c.profile},
      {"seed", c.seed},
      {"device", c.device},
      {"threads", c.threads},
      {"backbone",
       {{"type", c.backbone.type},
        {"patch_size", c.backbone.patch_size},
        {"depths", c.backbone.depths},
        {"heads", c.backbone.heads},
        {"window", c.backbone.window},
        {"embed_dim", c.backbone.embed_dim},
        {"d_model", c.backbone.d_model},
        {"dc_dilation", c.backbone.dc_dilation},
        {"dilated", c.backbone.dilated}}},
      {"detector",
       {{"num_proposals", c.detector.num_proposals},
        {"dim", c.detector.dim},
        {"stages", c.detector.stages},
        {"dyn_dim", c.detector.dyn_dim},
        {"heads", c.detector.heads}}},
      {"rc", {{"enabled", c.rc.enabled}, {"heads", c.rc.heads}, {"depth", c.rc.depth}}},
      {"recognizer",
       {{"max_len", c.recognizer.model.max_len},
        {"window", c.recognizer.model.window},
        {"pool", c.recognizer.model.pool},
        {"depth", c.recognizer.model.depth},
        {"heads", c.recognizer.model.heads},
        {"alphabet", c.recognizer.alphabet},
        {"train_roi", c.recognizer.train_roi}}},
      {"mask", {{"n_pca", c.mask.n_pca}, {"basis_min_masks", c.mask.basis_min_masks}}},
      {"loss",
       {{"cls", c.loss.weights.cls},
        {"l1", c.loss.weights.l1},
        {"giou", c.loss.weights.giou},
        {"mask", c.loss.weights.mask},
        {"recognition", c.loss.recognition},
        {"focal_alpha", c.loss.focal.alpha},
        {"focal_gamma", c.loss.focal.gamma}}},
      {"optimizer",
       {{"lr", c.optimizer.lr},
        {"weight_decay", c.optimizer.weight_decay},
        {"schedule", c.optimizer.schedule},
        {"milestones", c.optimizer.milestones},
        {"gamma", c.optimizer.gamma},
        {"iterations", c.optimizer.iterations},
        {"warmup", c.optimizer.warmup},
        {"batch_size", c.optimizer.batch_size},
        {"grad_clip", c.optimizer.grad_clip}}},
      {"data",
       {{"train", c.data.train},
        {"eval", c.data.eval},
        {"input_width", c.data.input_width},
        {"input_height", c.data.input_height},
        {"num_train", c.data.num_train},
        {"num_eval", c.data.num_eval},
        {"seed_offset", c.data.seed_offset},
        {"synthetic", profile_json(c.data.synthetic)},
        {"augment",
         {{"enabled", c.data.augment.enabled},
          {"min_scale", c.data.augment.min_scale},
          {"max_scale", c.data.augment.max_scale},
          {"max_rotation_deg", c.data.augment.max_rotation_deg},
          {"max_shift", c.data.augment.max_shift},
          {"brightness", c.data.augment.brightness},
          {"contrast", c.data.augment.contrast}}}}},
      {"eval",
       {{"score_threshold", c.eval.score_threshold},
        {"mask_threshold", c.eval.mask_threshold},
        {"iou_threshold", c.eval.iou_threshold},
        {"ned_penalize_false_positives", c.eval.ned_penalize_false_positives},
        {"nms", c.eval.nms},
        {"nms_iou", c.eval.nms_iou}}},
      {"log", {{"interval", c.log.interval}, {"checkpoint_interval", c.log.checkpoint_interval}}},
  };
}

}  // namespace spotter::config
