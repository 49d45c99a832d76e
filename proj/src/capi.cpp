#include "srnet.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gradcheck.hpp"
#include "image_io.hpp"
#include "pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using srnet::Error;
using srnet::ErrorCode;

thread_local std::string g_last_error;

srnet_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
      return SRNET_ERR_INVALID_ARGUMENT;
    case ErrorCode::io:
      return SRNET_ERR_IO;
    case ErrorCode::protocol:
      return SRNET_ERR_PROTOCOL;
    case ErrorCode::unsupported:
      return SRNET_ERR_UNSUPPORTED;
    case ErrorCode::numeric:
      return SRNET_ERR_NUMERIC;
  }
  return SRNET_ERR_INTERNAL;
}

template <typename Fn>
srnet_status guarded(Fn&& fn) {
  try {
    fn();
    return SRNET_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SRNET_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SRNET_ERR_INTERNAL;
  }
}

void require_arg(bool cond, const char* msg) {
  if (!cond) srnet::fail(ErrorCode::invalid_argument, msg);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

srnet::pipeline::RunConfig config_from_handle(const srnet_config* cfg);

}  // namespace

struct srnet_config {
  srnet::KvConfig kv;
};

struct srnet_model {
  srnet::pipeline::Model<float> model;
};

struct srnet_session {
  srnet::pipeline::Session<float> session;
  int height, width, num_objects;
};

namespace {

srnet::pipeline::RunConfig config_from_handle(const srnet_config* cfg) {
  if (!cfg) return srnet::pipeline::RunConfig{};
  return srnet::pipeline::RunConfig::from_kv(cfg->kv);
}

}  // namespace

extern "C" {

const char* srnet_last_error(void) { return g_last_error.c_str(); }

const char* srnet_version(void) { return "srnet 1.0.0"; }

void srnet_string_free(char* s) { delete[] s; }

srnet_status srnet_config_create(srnet_config** out) {
  return guarded([&] {
    require_arg(out != nullptr, "out must not be NULL");
    *out = new srnet_config{};
  });
}

srnet_status srnet_config_load(const char* path, srnet_config** out) {
  return guarded([&] {
    require_arg(path && out, "path/out must not be NULL");
    auto kv = srnet::KvConfig::from_file(path);
    *out = new srnet_config{std::move(kv)};
  });
}

srnet_status srnet_config_set(srnet_config* cfg, const char* key,
                              const char* value) {
  return guarded([&] {
    require_arg(cfg && key && value, "cfg/key/value must not be NULL");
    cfg->kv.set(key, value);
  });
}

srnet_status srnet_config_get(const srnet_config* cfg, const char* key,
                              char* buf, size_t buf_len) {
  return guarded([&] {
    require_arg(cfg && key && buf, "cfg/key/buf must not be NULL");
    require_arg(cfg->kv.has(key), "unknown config key");
    const std::string v = cfg->kv.get_string(key, "");
    require_arg(v.size() + 1 <= buf_len, "buffer too small");
    std::memcpy(buf, v.c_str(), v.size() + 1);
  });
}

void srnet_config_destroy(srnet_config* cfg) { delete cfg; }

srnet_status srnet_synth(const char* spec_path, const char* out_dir) {
  return guarded([&] {
    require_arg(spec_path && out_dir, "spec_path/out_dir must not be NULL");
    const auto spec = srnet::synth::parse_sequence_spec(
        srnet::KvConfig::from_file(spec_path));
    srnet::synth::write_sequence(srnet::synth::generate(spec), out_dir);
  });
}

srnet_status srnet_train(const char* spec_path, const srnet_config* cfg,
                         const char* out_dir, double* final_loss) {
  return guarded([&] {
    require_arg(spec_path && out_dir, "spec_path/out_dir must not be NULL");
    const auto spec = srnet::synth::parse_sequence_spec(
        srnet::KvConfig::from_file(spec_path));
    const auto seq = srnet::synth::generate(spec);
    const auto run_cfg = config_from_handle(cfg);
    auto model = srnet::pipeline::Model<float>::create(run_cfg, spec.height,
                                                       spec.width);
    const auto result = srnet::pipeline::train_toy(model, seq);
    model.save(out_dir);
    std::ofstream losses(fs::path(out_dir) / "loss.csv");
    losses << "iteration,loss\n";
    for (size_t i = 0; i < result.losses.size(); ++i)
      losses << i << "," << result.losses[i] << "\n";
    if (final_loss) *final_loss = result.final_loss;
  });
}

srnet_status srnet_infer(const char* model_dir, const char* frames_dir,
                         const char* mask0_path, const char* out_dir,
                         double* fps) {
  return guarded([&] {
    require_arg(model_dir && frames_dir && mask0_path && out_dir,
                "model_dir/frames_dir/mask0_path/out_dir must not be NULL");
    const auto model = srnet::pipeline::Model<float>::load(model_dir);
    const double got =
        srnet::pipeline::infer_dir(model, frames_dir, mask0_path, out_dir);
    if (fps) *fps = got;
  });
}

srnet_status srnet_eval(const char* pred_dir, const char* gt_dir,
                        const char* report_csv, double* mean_j,
                        double* mean_f) {
  return guarded([&] {
    require_arg(pred_dir && gt_dir, "pred_dir/gt_dir must not be NULL");
    const auto report = srnet::pipeline::eval_dirs(pred_dir, gt_dir);
    if (report_csv) report.write_csv(report_csv);
    if (mean_j) *mean_j = report.mean_j();
    if (mean_f) *mean_f = report.mean_f();
  });
}

srnet_status srnet_ablate(const srnet_config* cfg, const char* report_path,
                          char** table_out) {
  return guarded([&] {
    require_arg(cfg != nullptr, "cfg must not be NULL");
    require_arg(cfg->kv.has("ablate.spec"),
                "config key ablate.spec (sequence spec path) is required");
    const auto spec = srnet::synth::parse_sequence_spec(
        srnet::KvConfig::from_file(cfg->kv.get_string("ablate.spec", "")));
    const auto seq = srnet::synth::generate(spec);
    const auto run_cfg = config_from_handle(cfg);
    std::vector<std::string> variants;
    {
      std::istringstream is(
          cfg->kv.get_string("ablate.variants", "default,fam_off,ptm_off"));
      std::string item;
      while (std::getline(is, item, ',')) {
        if (!item.empty()) variants.push_back(item);
      }
    }
    const auto rows = srnet::pipeline::ablate(run_cfg, seq, variants);
    const std::string table = srnet::pipeline::format_ablate_table(rows);
    if (report_path) {
      std::ofstream os(report_path);
      if (!os) srnet::fail(ErrorCode::io, std::string("cannot write ") + report_path);
      os << table;
    }
    if (table_out) *table_out = dup_string(table);
  });
}

srnet_status srnet_gradcheck(const char* op, char** table_out,
                             int* num_failed) {
  return guarded([&] {
    const auto rows = srnet::gradcheck::run_checks(op ? op : "");
    if (table_out) *table_out = dup_string(srnet::gradcheck::format_table(rows));
    if (num_failed) {
      int failed = 0;
      for (const auto& r : rows) failed += r.pass ? 0 : 1;
      *num_failed = failed;
    }
  });
}

srnet_status srnet_model_load(const char* model_dir, srnet_model** out) {
  return guarded([&] {
    require_arg(model_dir && out, "model_dir/out must not be NULL");
    *out = new srnet_model{srnet::pipeline::Model<float>::load(model_dir)};
  });
}

void srnet_model_destroy(srnet_model* model) { delete model; }

srnet_status srnet_model_frame_size(const srnet_model* model, int* height,
                                    int* width) {
  return guarded([&] {
    require_arg(model != nullptr, "model must not be NULL");
    if (height) *height = model->model.frame_h;
    if (width) *width = model->model.frame_w;
  });
}

srnet_status srnet_session_create(const srnet_model* model, int num_objects,
                                  srnet_session** out) {
  return guarded([&] {
    require_arg(model && out, "model/out must not be NULL");
    *out = new srnet_session{
        srnet::pipeline::Session<float>(model->model, num_objects),
        model->model.frame_h, model->model.frame_w, num_objects};
  });
}

void srnet_session_destroy(srnet_session* session) { delete session; }

srnet_status srnet_session_set_reference(srnet_session* session,
                                         const float* rgb,
                                         const uint8_t* labels) {
  return guarded([&] {
    require_arg(session && rgb && labels,
                "session/rgb/labels must not be NULL");
    const int h = session->height, w = session->width;
    srnet::Tensor<float> frame(
        {h, w, 3}, std::vector<float>(rgb, rgb + size_t(h) * w * 3));
    std::vector<int> lab(size_t(h) * w);
    for (size_t i = 0; i < lab.size(); ++i) lab[i] = labels[i];
    session->session.set_reference(frame, lab);
  });
}

srnet_status srnet_session_step(srnet_session* session, const float* rgb,
                                uint8_t* labels_out, float* probs_out) {
  return guarded([&] {
    require_arg(session && rgb && labels_out,
                "session/rgb/labels_out must not be NULL");
    const int h = session->height, w = session->width;
    srnet::Tensor<float> frame(
        {h, w, 3}, std::vector<float>(rgb, rgb + size_t(h) * w * 3));
    srnet::Tensor<float> probs;
    const std::vector<int> labels =
        session->session.step(frame, probs_out ? &probs : nullptr);
    for (size_t i = 0; i < labels.size(); ++i)
      labels_out[i] = static_cast<uint8_t>(labels[i]);
    if (probs_out)
      std::memcpy(probs_out, probs.data(), sizeof(float) * size_t(probs.numel()));
  });
}

}  // extern "C"
