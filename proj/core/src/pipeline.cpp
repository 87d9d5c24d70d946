// Copyright 2026 The fba Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fba/pipeline.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "fba/attention.hpp"
#include "fba/bytes.hpp"
#include "fba/classify.hpp"
#include "fba/errors.hpp"
#include "fba/evaluate.hpp"
#include "fba/hash.hpp"
#include "fba/image_io.hpp"
#include "fba/imagesets.hpp"
#include "fba/parallel.hpp"
#include "fba/random.hpp"
#include "fba/results_io.hpp"
#include "fba/synthetic.hpp"
#include "fba/tensor_io.hpp"
#include "fba/trainer.hpp"
#include "fba/weights_io.hpp"

namespace fba {

namespace fs = std::filesystem;

namespace {

void say(const CommandContext& ctx, const std::string& message) {
  if (ctx.log) *ctx.log << message << '\n' << std::flush;
}

FeatureVector to_vector(const Tensor& t) { return FeatureVector(t.data().begin(), t.data().end()); }

/// First `cap` images of each category, keeping dataset order.
Dataset cap_per_category(Dataset dataset, std::size_t cap) {
  std::vector<std::size_t> seen(dataset.categories.size(), 0);
  std::erase_if(dataset.images, [&](const ImageRecord& r) { return ++seen[static_cast<std::size_t>(r.label)] > cap; });
  return dataset;
}

Model load_model(const RunConfig& config) {
  const auto path = artifact_paths(config).weights;
  if (!fs::is_regular_file(path)) throw Error("weight file not found: " + path.string() + " (run train first)");
  WeightFile file = load_weights(path);
  const std::string expected = weights_provenance(config);
  if (file.provenance != expected) {
    throw ProvenanceError("weight file " + path.string() + " was trained under a different dataset, backbone or seed (" +
                          file.provenance + ", config gives " + expected + "); rerun train");
  }
  return std::move(file.model);
}

std::vector<CompositeRecord> load_imageset(const RunConfig& config, ImagesetKind kind,
                                           const std::vector<std::string>& categories) {
  const auto paths = artifact_paths(config);
  const fs::path manifest = kind == ImagesetKind::array ? paths.array_manifest : paths.merged_manifest;
  const fs::path pixels = kind == ImagesetKind::array ? paths.array_pixels : paths.merged_pixels;
  if (!fs::is_regular_file(manifest) || !fs::is_regular_file(pixels)) {
    throw Error(std::string(to_string(kind)) + " imageset not found under " + manifest.parent_path().string() +
                " (run make-imagesets first)");
  }
  std::string provenance;
  auto records = read_manifest(manifest, categories, &provenance);
  if (provenance != imagesets_provenance(config)) {
    throw ProvenanceError("imageset manifest " + manifest.string() +
                          " was built under a different dataset, imageset settings or seed; rerun make-imagesets");
  }
  unstack_pixels(load_tensor(pixels), records);
  return records;
}

std::string cell_key(ImagesetKind imageset, const std::string& category, const std::optional<AttentionTag>& tag) {
  std::string key = std::string(to_string(imageset)) + ',' + category;
  if (tag) {
    key += std::string(",") + to_string(tag->mode) + ',' + to_string(tag->rectification) + ',' +
           layers_string(tag->layers) + ',' + format_number(tag->beta);
  } else {
    key += ",none";
  }
  return key;
}

std::string cell_key(const EvalRecord& r) { return cell_key(r.imageset, r.category, r.attention); }

/// Test images of one imageset: pixels plus the labels each image contains.
struct TestPool {
  std::vector<const Tensor*> pixels;
  std::vector<std::vector<int>> labels;
};

struct CategoryTest {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

CategoryTest select_test(const TestPool& pool, ImagesetKind kind, int category, const std::string& name,
                         std::size_t n_pos, std::size_t n_neg) {
  CategoryTest t;
  for (std::size_t i = 0; i < pool.pixels.size(); ++i) {
    const auto& l = pool.labels[i];
    const bool has = std::find(l.begin(), l.end(), category) != l.end();
    if (has && t.positives.size() < n_pos) t.positives.push_back(i);
    if (!has && t.negatives.size() < n_neg) t.negatives.push_back(i);
  }
  if (t.positives.size() < n_pos) {
    throw ArgumentError(std::string(to_string(kind)) + " imageset has " + std::to_string(t.positives.size()) +
                        " images containing '" + name + "', need " + std::to_string(n_pos));
  }
  if (t.negatives.size() < n_neg) {
    throw ArgumentError(std::string(to_string(kind)) + " imageset has " + std::to_string(t.negatives.size()) +
                        " images without '" + name + "', need " + std::to_string(n_neg));
  }
  return t;
}

struct CellOutput {
  std::vector<EvalRecord> records;
  std::vector<EvalRecord> control;
};

CsvTable comparison_table(const ComparisonResult& r) {
  CsvTable t{{"option", "wins", "significant_wins", "p_value"}, {}};
  for (std::size_t i = 0; i < r.options.size(); ++i) {
    t.rows.push_back({r.options[i], std::to_string(r.wins[i]), std::to_string(r.significant_wins[i]),
                      format_number(r.p_values[i])});
  }
  return t;
}

CsvTable comparison_cells(const ComparisonResult& r) {
  CsvTable t{{"category", "context", "winner", "runner_up", "winner_mean", "runner_up_mean", "p_value", "significant"},
             {}};
  for (const auto& c : r.cells) {
    t.rows.push_back({c.category, c.context, c.winner.empty() ? "tie" : c.winner, c.runner_up,
                      format_number(c.winner_mean), format_number(c.runner_up_mean), format_number(c.p_value),
                      c.significant ? "1" : "0"});
  }
  return t;
}

std::vector<std::string> delta_fields(const DeltaRow& d) {
  return {d.category,
          to_string(d.imageset),
          to_string(d.attention.mode),
          to_string(d.attention.rectification),
          layers_string(d.attention.layers),
          format_number(d.attention.beta),
          std::to_string(d.folds),
          format_number(d.baseline_accuracy),
          format_number(d.accuracy),
          format_number(d.delta)};
}

const std::vector<std::string> kDeltaColumns{"category", "imageset", "mode",          "rectification", "layers",
                                             "beta",     "folds",    "baseline_accuracy", "accuracy",   "delta"};

}  // namespace

std::uint64_t stream_seed(const RunConfig& config, SeedStream stream) {
  return derive_seed(config.master_seed(), {static_cast<std::uint64_t>(stream)});
}

Dataset load_split(const RunConfig& config, const std::string& split) {
  const auto& d = config.dataset;
  const std::size_t per = split == "train" ? d.train_per_category : d.test_per_category;
  if (d.source == "directory") return cap_per_category(load_image_directory(d.root / split, d.size, 3), per);
  return synthetic_dataset(d.categories, per, d.size, stream_seed(config, SeedStream::dataset), split);
}

NetworkSpec backbone_spec(const RunConfig& config, std::size_t categories) {
  return desk_backbone(categories, config.dataset.size, 3, config.backbone.conv, config.backbone.fc);
}

std::string weights_provenance(const RunConfig& config) {
  return short_hash("dataset " + config.canonical("dataset") + "\nbackbone " + config.canonical("backbone") +
                    "\nseed " + std::to_string(config.master_seed()));
}

std::string imagesets_provenance(const RunConfig& config) {
  return short_hash("dataset " + config.canonical("dataset") + "\nimagesets " + config.canonical("imagesets") +
                    "\nseed " + std::to_string(config.master_seed()));
}

ArtifactPaths artifact_paths(const RunConfig& config) {
  const auto& p = config.paths;
  const fs::path results_dir = p.results.parent_path();
  return {p.weights,
          p.out / "train_log.csv",
          p.patterns,
          p.imagesets / "array.tsv",
          p.imagesets / "array.fbat",
          p.imagesets / "merged.tsv",
          p.imagesets / "merged.fbat",
          p.results,
          results_dir / "control.csv",
          results_dir / "topk.csv"};
}

void cmd_train(const RunConfig& config, const CommandContext& ctx) {
  const auto paths = artifact_paths(config);
  const Dataset train = load_split(config, "train");
  const NetworkSpec spec = backbone_spec(config, train.categories.size());
  TrainHyper hyper = config.backbone.hyper;
  hyper.seed = stream_seed(config, SeedStream::backbone);
  say(ctx, "training on " + std::to_string(train.images.size()) + " images, " +
               std::to_string(train.categories.size()) + " categories");

  CsvTable log{{"epoch", "loss", "accuracy"}, {}};
  const auto result = train_backbone(train, spec, hyper, [&](const EpochStats& e) {
    log.rows.push_back({std::to_string(e.epoch), format_number(e.loss), format_number(e.accuracy)});
    say(ctx, "epoch " + std::to_string(e.epoch) + " loss " + format_number(e.loss) + " accuracy " +
                 format_number(e.accuracy));
  });
  const std::string provenance = weights_provenance(config);
  save_weights(spec, result.weights, paths.weights, provenance);
  write_csv(paths.train_log, log, provenance);
  say(ctx, "wrote " + paths.weights.string());
}

void cmd_extract_patterns(const RunConfig& config, const CommandContext& ctx) {
  const auto paths = artifact_paths(config);
  const Model model = load_model(config);
  Dataset train = load_split(config, "train");
  if (config.pattern_images > 0) train = cap_per_category(std::move(train), config.pattern_images);
  for (std::size_t c = 0; c < train.categories.size(); ++c) {
    if (train.count(static_cast<int>(c)) == 0) {
      throw Error("category '" + train.categories[c] + "' has no images for pattern extraction");
    }
  }
  std::vector<std::size_t> channels;
  for (int r = 1; r <= relu_count(model.spec); ++r) channels.push_back(relu_channels(model.spec, r));
  ActivitySummary summary(train.categories, channels);

  using Activity = std::vector<std::vector<double>>;
  ordered_parallel<Activity>(
      train.images.size(), ctx.workers,
      [&](std::size_t i) {
        const auto trace = forward(model.spec, model.weights, train.images[i].pixels);
        Activity a;
        for (int r = 1; r <= relu_count(model.spec); ++r) a.push_back(spatial_average(trace, r));
        return a;
      },
      [&](std::size_t i, Activity& a) { summary.add(train.images[i].label, a); });

  const auto patterns = build_patterns(summary, Rectification::bidirectional);
  save_patterns(patterns, paths.patterns, short_hash(bytes::read_file(paths.weights)));
  for (std::size_t r = 0; r < channels.size(); ++r) {
    say(ctx, "relu " + std::to_string(r + 1) + ": " + std::to_string(channels[r]) + " channels");
  }
  say(ctx, "wrote " + paths.patterns.string() + " (" + std::to_string(patterns.patterns.size()) + " patterns)");
}

void cmd_make_imagesets(const RunConfig& config, const CommandContext& ctx) {
  const auto paths = artifact_paths(config);
  const Dataset test = load_split(config, "test");
  const std::string provenance = imagesets_provenance(config);
  const auto& ic = config.imagesets;
  const std::size_t size = config.dataset.size;

  auto emit = [&](const std::vector<CompositeRecord>& records, const fs::path& manifest, const fs::path& pixels,
                  const char* name) {
    write_manifest(records, test.categories, manifest, provenance);
    save_tensor(stack_pixels(records), pixels);
    if (ic.write_images) {
      for (const auto& r : records) write_pnm(r.pixels, manifest.parent_path() / name / (r.id + ".ppm"));
    }
    say(ctx, "wrote " + std::to_string(records.size()) + " " + name + " images to " + manifest.string());
  };
  if (ic.array_count > 0) {
    emit(make_array(test, ic.array_count, stream_seed(config, SeedStream::array), size), paths.array_manifest,
         paths.array_pixels, "array");
  }
  if (ic.merged_count > 0) {
    emit(make_merged(test, ic.merged_count, stream_seed(config, SeedStream::merged), ic.merged_weight),
         paths.merged_manifest, paths.merged_pixels, "merged");
  }
}

std::vector<SweepCell> sweep_cells(const RunConfig& config, const std::vector<std::string>& categories) {
  const auto& e = config.evaluate;
  std::vector<int> selected;
  if (e.categories.empty()) {
    for (std::size_t c = 0; c < categories.size(); ++c) selected.push_back(static_cast<int>(c));
  } else {
    for (const auto& name : e.categories) {
      const auto it = std::find(categories.begin(), categories.end(), name);
      if (it == categories.end()) throw ConfigError("evaluate.categories names unknown category '" + name + "'");
      selected.push_back(static_cast<int>(it - categories.begin()));
    }
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  }
  auto modes = e.modes;
  auto rects = e.rectifications;
  auto layer_sets = e.layer_sets;
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
  std::sort(rects.begin(), rects.end());
  rects.erase(std::unique(rects.begin(), rects.end()), rects.end());
  std::sort(layer_sets.begin(), layer_sets.end());
  layer_sets.erase(std::unique(layer_sets.begin(), layer_sets.end()), layer_sets.end());
  std::set<ImagesetKind> kinds(e.imagesets.begin(), e.imagesets.end());
  const std::set<ImagesetKind> attended(e.attended.begin(), e.attended.end());

  std::vector<SweepCell> cells;
  for (auto kind : kinds) {
    for (int c : selected) {
      cells.push_back({kind, c, std::nullopt});
      if (!attended.contains(kind)) continue;
      for (auto mode : modes) {
        std::set<double> grid(e.beta.at(mode).begin(), e.beta.at(mode).end());
        for (auto rect : rects) {
          for (const auto& layers : layer_sets) {
            for (double beta : grid) cells.push_back({kind, c, AttentionTag{mode, rect, layers, beta}});
          }
        }
      }
    }
  }
  return cells;
}

void cmd_evaluate(const RunConfig& config, const CommandContext& ctx) {
  const auto paths = artifact_paths(config);
  const auto& e = config.evaluate;
  const Model model = load_model(config);
  const std::string weights_hash = short_hash(bytes::read_file(paths.weights));
  if (!fs::is_regular_file(paths.patterns)) {
    throw Error("pattern file not found: " + paths.patterns.string() + " (run extract-patterns first)");
  }
  std::string pattern_network;
  const FeaturePatternSet patterns = load_patterns(paths.patterns, &pattern_network);
  if (pattern_network != weights_hash) {
    throw ProvenanceError("feature patterns in " + paths.patterns.string() +
                          " were extracted from a different weight file (network " + pattern_network +
                          ", current weights " + weights_hash + "); rerun extract-patterns");
  }
  const Dataset train = load_split(config, "train");
  const Dataset test = load_split(config, "test");
  if (patterns.categories != train.categories) {
    throw ProvenanceError("feature patterns cover different categories than the dataset; rerun extract-patterns");
  }
  const auto& names = train.categories;
  const std::set<ImagesetKind> kinds(e.imagesets.begin(), e.imagesets.end());
  const bool composites = kinds.contains(ImagesetKind::array) || kinds.contains(ImagesetKind::merged);

  std::string provenance = "weights=" + weights_hash + " patterns=" + short_hash(bytes::read_file(paths.patterns));
  if (composites) provenance += " imagesets=" + imagesets_provenance(config);
  provenance += " evaluate=" + short_hash(config.canonical("evaluate") + "\nseed " + std::to_string(config.master_seed()));

  const auto cells = sweep_cells(config, names);

  // Resume bookkeeping.
  std::set<std::string> complete;
  bool append = false;
  if (fs::exists(paths.results)) {
    if (!ctx.resume) {
      throw ConfigError("results file " + paths.results.string() +
                        " already exists; pass --resume to continue it or choose another --out");
    }
    // A crash can leave a torn last line and one partial cell at the tail;
    // both are dropped. Anything else that is incomplete is refused.
    std::string text = bytes::read_file(paths.results);
    if (!text.empty() && text.back() != '\n') text.erase(text.rfind('\n') + 1);
    auto existing = decode_results(text);
    if (existing.provenance != provenance) {
      throw ProvenanceError("results in " + paths.results.string() + " were produced from different inputs (" +
                            existing.provenance + ", now " + provenance + "); refusing to resume");
    }
    std::size_t kept = 0;
    for (std::size_t i = 0; i < existing.records.size();) {
      const std::string key = cell_key(existing.records[i]);
      std::size_t j = i;
      while (j < existing.records.size() && cell_key(existing.records[j]) == key) ++j;
      const bool tail = j == existing.records.size();
      if (complete.contains(key) || j - i > e.folds || (j - i < e.folds && !tail)) {
        throw ProvenanceError("results cell " + key + " in " + paths.results.string() + " holds " +
                              std::to_string(j - i) + " fold rows where " + std::to_string(e.folds) +
                              " were expected; delete the file to recompute");
      }
      if (j - i == e.folds) {
        complete.insert(key);
        kept = j;
      }
      i = j;
    }
    if (kept != existing.records.size() || text.size() != fs::file_size(paths.results)) {
      say(ctx, "dropping " + std::to_string(existing.records.size() - kept) + " rows of an interrupted cell");
      existing.records.resize(kept);
      write_results(paths.results, existing.records, existing.provenance);
    }
    append = true;
    if (fs::exists(paths.control)) {
      auto control = read_results(paths.control);
      std::erase_if(control.records, [&](const EvalRecord& r) { return !complete.contains(cell_key(r)); });
      write_results(paths.control, control.records, control.provenance);
    }
  }
  std::vector<SweepCell> pending;
  for (const auto& cell : cells) {
    if (!complete.contains(cell_key(cell.imageset, names[static_cast<std::size_t>(cell.category)], cell.attention))) {
      pending.push_back(cell);
    }
  }
  say(ctx, std::to_string(cells.size()) + " sweep cells, " + std::to_string(cells.size() - pending.size()) +
               " already complete");

  // Test pools.
  std::map<ImagesetKind, std::vector<CompositeRecord>> composite_sets;
  std::map<ImagesetKind, TestPool> pools;
  for (auto kind : kinds) {
    TestPool pool;
    if (kind == ImagesetKind::normal) {
      for (const auto& img : test.images) {
        pool.pixels.push_back(&img.pixels);
        pool.labels.push_back({img.label});
      }
    } else {
      composite_sets[kind] = load_imageset(config, kind, names);
      for (const auto& r : composite_sets[kind]) {
        pool.pixels.push_back(&r.pixels);
        pool.labels.push_back(r.categories);
      }
    }
    pools[kind] = std::move(pool);
  }

  std::set<int> used_categories;
  for (const auto& cell : cells) used_categories.insert(cell.category);
  std::map<std::pair<ImagesetKind, int>, CategoryTest> tests;
  std::map<ImagesetKind, std::set<std::size_t>> needed;
  for (auto kind : kinds) {
    for (int c : used_categories) {
      auto t = select_test(pools[kind], kind, c, names[static_cast<std::size_t>(c)], e.test_positives,
                           e.test_negatives);
      needed[kind].insert(t.positives.begin(), t.positives.end());
      needed[kind].insert(t.negatives.begin(), t.negatives.end());
      tests[{kind, c}] = std::move(t);
    }
  }

  // Unattended traces of every test image in use.
  std::map<ImagesetKind, std::map<std::size_t, ForwardTrace>> traces;
  for (auto kind : kinds) {
    const std::vector<std::size_t> ids(needed[kind].begin(), needed[kind].end());
    auto& out = traces[kind];
    ordered_parallel<ForwardTrace>(
        ids.size(), ctx.workers,
        [&](std::size_t i) { return forward(model.spec, model.weights, *pools[kind].pixels[ids[i]]); },
        [&](std::size_t i, ForwardTrace& t) { out.emplace(ids[i], std::move(t)); });
  }

  // Classifiers, trained once per category and fold on unattended training features.
  std::vector<FeatureVector> table(train.images.size());
  ordered_parallel<FeatureVector>(
      train.images.size(), ctx.workers,
      [&](std::size_t i) { return to_vector(forward(model.spec, model.weights, train.images[i].pixels).features); },
      [&](std::size_t i, FeatureVector& f) { table[i] = std::move(f); });
  std::map<int, std::vector<BinaryClassifier>> classifiers;
  const std::vector<int> category_list(used_categories.begin(), used_categories.end());
  ordered_parallel<std::vector<BinaryClassifier>>(
      category_list.size(), ctx.workers,
      [&](std::size_t i) {
        const int c = category_list[i];
        const auto positives = train.indices_of(c);
        std::vector<std::size_t> negatives;
        for (std::size_t k = 0; k < train.images.size(); ++k) {
          if (train.images[k].label != c) negatives.push_back(k);
        }
        const auto plan =
            make_fold_plan(positives, negatives, e.train_positives, e.train_negatives, e.folds,
                           derive_seed(stream_seed(config, SeedStream::folds), {static_cast<std::uint64_t>(c)}));
        return train_folds(plan, table, names[static_cast<std::size_t>(c)], e.reg);
      },
      [&](std::size_t i, std::vector<BinaryClassifier>& fitted) { classifiers[category_list[i]] = std::move(fitted); });
  say(ctx, "trained " + std::to_string(category_list.size() * e.folds) + " detectors");

  const FeaturePatternSet control_patterns =
      e.control ? perturb_patterns(patterns, e.perturb, stream_seed(config, SeedStream::control)) : patterns;
  const std::set<ImagesetKind> attended(e.attended.begin(), e.attended.end());

  auto test_features = [&](const SweepCell& cell, const FeaturePatternSet* pats) {
    const auto& t = tests.at({cell.imageset, cell.category});
    const auto& tr = traces.at(cell.imageset);
    TestSet set;
    std::optional<ReluModulation> mod;
    if (pats) {
      AttentionConfig ac;
      ac.mode = cell.attention->mode;
      ac.rectification = cell.attention->rectification;
      ac.layers = cell.attention->layers;
      ac.beta = cell.attention->beta;
      ac.multi_layer_scale = e.multi_layer_scale;
      ac.clamp_slope = e.clamp_slope;
      ac.validate();
      mod = make_modulation(ac, *pats, cell.category);
    }
    auto add = [&](std::size_t id, int present) {
      const ForwardTrace& base = tr.at(id);
      if (mod) {
        const int first = mod->first_layer();
        set.features.push_back(to_vector(
            forward_from(model.spec, model.weights, first, base.relu_inputs[static_cast<std::size_t>(first - 1)], &*mod)
                .features));
      } else {
        set.features.push_back(to_vector(base.features));
      }
      set.present.push_back(present);
    };
    for (auto id : t.positives) add(id, 1);
    for (auto id : t.negatives) add(id, 0);
    return set;
  };

  if (!append) fs::remove(paths.control);
  ResultsWriter writer(paths.results, provenance, append);
  std::optional<ResultsWriter> control_writer;
  if (e.control && !attended.empty()) {
    control_writer.emplace(paths.control, provenance + " control=" + (e.perturb.kind == PerturbSpec::Kind::shuffle
                                                                          ? std::string("shuffle")
                                                                          : "gaussian:" + format_number(e.perturb.scale)),
                           append && fs::exists(paths.control));
  }
  std::size_t done = 0;
  ordered_parallel<CellOutput>(
      pending.size(), ctx.workers,
      [&](std::size_t i) {
        const SweepCell& cell = pending[i];
        EvalRecord key;
        key.category = names[static_cast<std::size_t>(cell.category)];
        key.imageset = cell.imageset;
        key.attention = cell.attention;
        const auto& fitted = classifiers.at(cell.category);
        CellOutput out;
        out.records = score_folds(fitted, test_features(cell, cell.attention ? &patterns : nullptr), key);
        if (cell.attention && control_writer) {
          out.control = score_folds(fitted, test_features(cell, &control_patterns), key);
        }
        return out;
      },
      [&](std::size_t, CellOutput& out) {
        if (control_writer && !out.control.empty()) control_writer->append(out.control);
        writer.append(out.records);
        if (++done % 100 == 0) say(ctx, std::to_string(done) + " / " + std::to_string(pending.size()) + " cells");
      });

  if (composite_sets.contains(ImagesetKind::merged)) {
    const auto& merged = composite_sets.at(ImagesetKind::merged);
    std::vector<std::vector<float>> probabilities(merged.size());
    ordered_parallel<std::vector<float>>(
        merged.size(), ctx.workers,
        [&](std::size_t i) { return to_vector(forward(model.spec, model.weights, merged[i].pixels).probabilities); },
        [&](std::size_t i, std::vector<float>& p) { probabilities[i] = std::move(p); });
    CsvTable topk{{"k", "error"}, {}};
    for (std::size_t k = 1; k <= std::min(e.topk, names.size()); ++k) {
      topk.rows.push_back({std::to_string(k), format_number(topk_merged_error(probabilities, merged, k))});
    }
    write_csv(paths.topk, topk, provenance);
  }
  say(ctx, "wrote " + paths.results.string());
}

void cmd_analyze(const fs::path& results, const fs::path& out_dir, double alpha, const CommandContext& ctx) {
  if (!fs::is_regular_file(results)) throw Error("results file not found: " + results.string());
  const auto table = read_results(results);
  if (table.records.empty()) throw Error("no records in " + results.string());
  const std::string provenance = short_hash(bytes::read_file(results));
  const auto& records = table.records;

  const auto deltas = accuracy_delta(records);
  const auto best = best_beta(deltas);
  CsvTable delta_csv{kDeltaColumns, {}}, best_csv{kDeltaColumns, {}};
  for (const auto& d : deltas) delta_csv.rows.push_back(delta_fields(d));
  for (const auto& d : best) best_csv.rows.push_back(delta_fields(d));
  write_csv(out_dir / "deltas.csv", delta_csv, provenance);
  write_csv(out_dir / "best_beta.csv", best_csv, provenance);

  CsvTable roc{{"category", "imageset", "mode", "rectification", "layers", "beta", "fpr", "tpr"}, {}};
  CsvTable trajectory{{"category", "imageset", "mode", "rectification", "layers", "beta", "delta_fpr", "delta_fnr"}, {}};
  for (const auto& g : best) {
    const auto& a = g.attention;
    const std::vector<std::string> head{g.category, to_string(g.imageset), to_string(a.mode),
                                        to_string(a.rectification), layers_string(a.layers)};
    for (const auto& p : roc_by_strength(records, g.category, g.imageset, a.mode, a.rectification, a.layers)) {
      auto row = head;
      row.insert(row.end(), {format_number(p.beta), format_number(p.fpr), format_number(p.tpr)});
      roc.rows.push_back(std::move(row));
    }
    for (const auto& p : rate_trajectory(records, g.category, g.imageset, a.mode, a.rectification, a.layers)) {
      auto row = head;
      row.insert(row.end(), {format_number(p.beta), format_number(p.delta_fpr), format_number(p.delta_fnr)});
      trajectory.rows.push_back(std::move(row));
    }
  }
  write_csv(out_dir / "roc.csv", roc, provenance);
  write_csv(out_dir / "trajectory.csv", trajectory, provenance);

  // Baseline accuracy per imageset and category, averaged over folds.
  std::map<std::pair<ImagesetKind, std::string>, std::vector<double>> base;
  for (const auto& r : records) {
    if (!r.attention) base[{r.imageset, r.category}].push_back(r.accuracy());
  }
  CsvTable baseline{{"imageset", "category", "folds", "accuracy"}, {}};
  CsvTable summary{{"metric", "imageset", "option", "layers", "value"}, {}};
  std::map<ImagesetKind, std::vector<double>> per_imageset;
  for (const auto& [key, accs] : base) {
    double sum = 0.0;
    for (double a : accs) sum += a;
    const double mean = sum / static_cast<double>(accs.size());
    per_imageset[key.first].push_back(mean);
    baseline.rows.push_back({to_string(key.first), key.second, std::to_string(accs.size()), format_number(mean)});
  }
  for (const auto& [kind, means] : per_imageset) {
    double sum = 0.0;
    for (double m : means) sum += m;
    summary.rows.push_back({"baseline_accuracy", to_string(kind), "none", "none",
                            format_number(sum / static_cast<double>(means.size()))});
  }
  write_csv(out_dir / "baseline.csv", baseline, provenance);

  std::map<std::tuple<ImagesetKind, std::string, std::string>, std::vector<double>> best_by_group;
  for (const auto& d : best) {
    best_by_group[{d.imageset, d.attention.option(), layers_string(d.attention.layers)}].push_back(d.delta);
  }
  for (const auto& [key, values] : best_by_group) {
    double sum = 0.0;
    for (double v : values) sum += v;
    summary.rows.push_back({"mean_best_delta", to_string(std::get<0>(key)), std::get<1>(key), std::get<2>(key),
                            format_number(sum / static_cast<double>(values.size()))});
  }

  // Win histograms for every attended imageset.
  std::set<ImagesetKind> attended_kinds;
  std::set<ModulationMode> modes;
  std::set<Rectification> rects;
  for (const auto& r : records) {
    if (!r.attention) continue;
    attended_kinds.insert(r.imageset);
    modes.insert(r.attention->mode);
    rects.insert(r.attention->rectification);
  }
  for (auto kind : attended_kinds) {
    std::vector<std::pair<std::string, ComparisonRequest>> requests;
    requests.push_back({"win_options", {ComparisonAxis::options, kind, {}, {}, {}, alpha}});
    requests.push_back({"win_layers", {ComparisonAxis::layers, kind, {}, {}, {}, alpha}});
    for (auto rect : rects) {
      requests.push_back({std::string("win_mode_") + to_string(rect),
                          {ComparisonAxis::mode_within_rectification, kind, rect, {}, {}, alpha}});
    }
    for (auto mode : modes) {
      requests.push_back({std::string("win_rectification_") + to_string(mode),
                          {ComparisonAxis::rectification_within_mode, kind, {}, mode, {}, alpha}});
    }
    for (const auto& [name, request] : requests) {
      ComparisonResult result;
      try {
        result = win_histograms(records, request);
      } catch (const ArgumentError& err) {
        say(ctx, "skipped " + name + " on " + to_string(kind) + ": " + err.what());
        continue;
      }
      if (result.comparisons == 0) continue;
      const std::string stem = name + "_" + to_string(kind);
      const std::string note = provenance + " test=" + result.test + " comparisons=" + std::to_string(result.comparisons);
      write_csv(out_dir / (stem + ".csv"), comparison_table(result), note);
      write_csv(out_dir / (stem + "_cells.csv"), comparison_cells(result), note);
    }
  }

  // Perturbed-pattern control.
  const fs::path control_path = results.parent_path() / "control.csv";
  if (fs::is_regular_file(control_path)) {
    auto control = read_results(control_path).records;
    for (const auto& r : records) {
      if (!r.attention) control.push_back(r);
    }
    const auto control_best = best_beta(accuracy_delta(control));
    std::map<std::string, const DeltaRow*> lookup;
    for (const auto& d : control_best) {
      lookup[d.category + '\x1f' + to_string(d.imageset) + '\x1f' + d.attention.option() + '\x1f' +
             layers_string(d.attention.layers)] = &d;
    }
    CsvTable cmp{{"category", "imageset", "mode", "rectification", "layers", "true_beta", "true_delta", "control_beta",
                  "control_delta", "true_better"},
                 {}};
    std::map<std::tuple<ImagesetKind, std::string, std::string>, std::pair<std::size_t, std::size_t>> tally;
    for (const auto& d : best) {
      const auto it = lookup.find(d.category + '\x1f' + to_string(d.imageset) + '\x1f' + d.attention.option() +
                                  '\x1f' + layers_string(d.attention.layers));
      if (it == lookup.end()) continue;
      const bool better = d.delta > it->second->delta;
      cmp.rows.push_back({d.category, to_string(d.imageset), to_string(d.attention.mode),
                          to_string(d.attention.rectification), layers_string(d.attention.layers),
                          format_number(d.attention.beta), format_number(d.delta),
                          format_number(it->second->attention.beta), format_number(it->second->delta),
                          better ? "1" : "0"});
      auto& t = tally[{d.imageset, d.attention.option(), layers_string(d.attention.layers)}];
      t.first += better ? 1 : 0;
      ++t.second;
    }
    write_csv(out_dir / "control_comparison.csv", cmp, provenance);
    for (const auto& [key, t] : tally) {
      summary.rows.push_back({"control_true_better_fraction", to_string(std::get<0>(key)), std::get<1>(key),
                              std::get<2>(key),
                              format_number(static_cast<double>(t.first) / static_cast<double>(t.second))});
    }
  }
  write_csv(out_dir / "summary.csv", summary, provenance);
  say(ctx, "wrote analysis tables to " + out_dir.string());
}

}  // namespace fba
