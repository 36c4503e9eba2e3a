#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fieldauth/fieldauth.hpp"

namespace fieldauth::cli {

enum ExitCode { kOk = 0, kDomainError = 1, kUsageError = 2 };

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

inline GrayImage load_image(const std::string& path, int raw_width, int raw_height) {
  if (raw_width > 0 || raw_height > 0) return load_raw(path, raw_width, raw_height);
  return load_pgm(path);
}

inline std::map<std::string, std::string> read_index(const std::filesystem::path& dir) {
  std::map<std::string, std::string> labels;
  std::ifstream in(dir / kGalleryIndex);
  if (!in) return labels;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed gallery index: " + std::string(e.what()));
  }
  for (auto it = j.begin(); it != j.end(); ++it) labels[it.key()] = it.value().get<std::string>();
  return labels;
}

}  // namespace detail

// Runs one command line (without the program name). Machine output goes to
// `out`, diagnostics and usage to `err`.
inline int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy-aware fingerprint authentication toolkit", "fieldauth"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string params_path;
  app.add_option("--params", params_path, "EnergyParams overrides, one 'key = value' per line");

  std::function<void(const EnergyParams&)> action;
  auto params = [&] {
    EnergyParams p = params_path.empty() ? EnergyParams{} : load_energy_params(params_path);
    p.validate();
    return p;
  };

  // table2
  bool table2_json_out = false;
  auto* t2 = app.add_subcommand("table2", "Retries per hour on RF harvesting, sensor x allocation (CSV)");
  t2->add_flag("--json", table2_json_out, "Emit JSON with raw and displayed values");
  t2->callback([&] {
    action = [&](const EnergyParams& p) {
      const auto t = table2(p);
      if (table2_json_out) out << table2_json(t).dump(2) << '\n';
      else out << table2_csv(t);
    };
  });

  // figure4
  bool fig4_json = false;
  auto* f4 = app.add_subcommand("figure4", "Per-request sensor energy breakdown and retries, 16 rows (CSV)");
  f4->add_flag("--json", fig4_json, "Emit JSON instead of CSV");
  f4->callback([&] {
    action = [&](const EnergyParams& p) {
      const auto rows = figure4_export(p);
      if (fig4_json) out << figure4_json(rows).dump(2) << '\n';
      else out << figure4_csv(rows);
    };
  });

  // explore
  std::string ex_te = "hub", ex_channel = "hbc", ex_sensor = "capacitive", ex_power = "rf_harvest", ex_algo = "high";
  double ex_distance = 1000.0;
  auto* ex = app.add_subcommand("explore", "Lifetime of a single allocation (JSON)");
  ex->add_option("--te", ex_te, "TE location: sensor|hub|cloud")->capture_default_str();
  ex->add_option("--channel", ex_channel, "On-body channel: wban|hbc")->capture_default_str();
  ex->add_option("--sensor", ex_sensor, "Sensor: capacitive|optical")->capture_default_str();
  ex->add_option("--power", ex_power, "Sensor power: rf_harvest|coin_cell")->capture_default_str();
  ex->add_option("--distance", ex_distance, "Hub to base station distance, m")->capture_default_str();
  ex->add_option("--algo", ex_algo, "TE algorithm: high|light")->capture_default_str();
  ex->callback([&] {
    action = [&](const EnergyParams& p) {
      SystemConfig c;
      c.te_location = parse_te_location(ex_te);
      c.on_body = parse_on_body_channel(ex_channel);
      c.sensor = parse_sensor(ex_sensor);
      c.power = parse_power(ex_power);
      c.lora_distance = ex_distance;
      c.te_variant = parse_te_variant(ex_algo);
      out << lifetime_json(evaluate(c, p)).dump(2) << '\n';
    };
  });

  // extract
  std::string xt_algo = "high", xt_image, xt_output;
  int xt_w = 0, xt_h = 0;
  auto* xt = app.add_subcommand("extract", "Fingerprint image (PGM, or raw with --width/--height) to .fpt template");
  xt->add_option("--algo", xt_algo, "high|light")->capture_default_str();
  xt->add_option("image", xt_image, "Input image")->required();
  xt->add_option("-o,--output", xt_output, "Output .fpt path")->required();
  xt->add_option("--width", xt_w, "Raw 8-bit image width");
  xt->add_option("--height", xt_h, "Raw 8-bit image height");
  xt->callback([&] {
    action = [&](const EnergyParams&) {
      const auto img = detail::load_image(xt_image, xt_w, xt_h);
      const auto t = extract_template(img, parse_te_variant(xt_algo));
      const auto bytes = encode(t);
      write_file_bytes(xt_output, bytes);
      nlohmann::ordered_json j;
      j["minutiae"] = t.minutiae.size();
      j["bytes"] = bytes.size();
      j["image_bytes"] = img.pixels().size();
      j["compression_ratio"] = compression_ratio(img.pixels().size(), bytes.size());
      out << j.dump() << '\n';
    };
  });

  // enroll
  std::string en_image, en_dir, en_label, en_algo = "high";
  auto* en = app.add_subcommand("enroll", "Extract an image and add it to a gallery directory");
  en->add_option("image", en_image, "Input PGM")->required();
  en->add_option("gallery", en_dir, "Gallery directory (created if missing)")->required();
  en->add_option("--label", en_label, "Identity label")->required();
  en->add_option("--algo", en_algo, "high|light")->capture_default_str();
  en->callback([&] {
    action = [&](const EnergyParams&) {
      const std::filesystem::path dir(en_dir);
      std::filesystem::create_directories(dir);
      const auto t = extract_template(load_pgm(en_image), parse_te_variant(en_algo));
      const std::string file = en_label + ".fpt";
      save_template((dir / file).string(), t);
      auto labels = detail::read_index(dir);
      labels[en_label] = file;
      save_gallery_index(dir, labels);
      out << nlohmann::ordered_json{{"label", en_label}, {"file", file}, {"minutiae", t.minutiae.size()}}.dump()
          << '\n';
    };
  });

  // match
  std::string mt_probe, mt_dir;
  MatchParams mt_params;
  auto* mt = app.add_subcommand("match", "Score a probe template against a gallery (JSON)");
  mt->add_option("probe", mt_probe, "Probe .fpt")->required();
  mt->add_option("gallery", mt_dir, "Gallery directory with index.json")->required();
  mt->add_option("--threshold", mt_params.threshold, "Accept threshold")->capture_default_str();
  mt->add_option("--position-tolerance", mt_params.position_tolerance, "Pixels")->capture_default_str();
  mt->add_option("--angle-tolerance", mt_params.angle_tolerance, "Radians")->capture_default_str();
  mt->callback([&] {
    action = [&](const EnergyParams&) {
      const auto ranked = match_gallery(load_template(mt_probe), load_gallery(mt_dir), mt_params);
      nlohmann::ordered_json j;
      j["decision"] = !ranked.empty() && ranked.front().result.decision == Decision::accept ? "accept" : "reject";
      j["identity"] = ranked.empty() ? "" : ranked.front().label;
      auto arr = nlohmann::ordered_json::array();
      for (const auto& m : ranked)
        arr.push_back({{"label", m.label},
                       {"score", m.result.score},
                       {"pairs", m.result.pairs.size()},
                       {"dx", m.result.transform.dx},
                       {"dy", m.result.transform.dy},
                       {"dtheta", m.result.transform.dtheta}});
      j["ranking"] = std::move(arr);
      out << j.dump(2) << '\n';
    };
  });

  // encrypt / decrypt
  std::string cr_key, cr_nonce = "0000000000000000", cr_in, cr_out;
  auto add_crypt = [&](const char* name, const char* help) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("input", cr_in, "Input file")->required();
    sc->add_option("-o,--output", cr_out, "Output file")->required();
    sc->add_option("--key", cr_key, "80-bit key, 20 hex digits")->required();
    sc->add_option("--nonce", cr_nonce, "64-bit nonce, 16 hex digits")->capture_default_str();
    sc->callback([&] {
      action = [&](const EnergyParams&) {
        write_file_bytes(cr_out, ctr_crypt(read_file_bytes(cr_in), parse_key(cr_key), parse_block(cr_nonce)));
      };
    });
  };
  add_crypt("encrypt", "PRESENT-80 counter-mode encryption of a file");
  add_crypt("decrypt", "PRESENT-80 counter-mode decryption of a file");

  // channel-sweep
  SweepConfig sw;
  std::vector<double> sw_hum;
  std::string sw_mode = "both", sw_waveform;
  auto* cs = app.add_subcommand("channel-sweep", "BER and eye opening over hum amplitudes (CSV)");
  cs->add_option("--hum", sw_hum, "Hum amplitudes relative to the signal (default 0 1 2 4 8 16 32 64)");
  cs->add_option("--mode", sw_mode, "direct|integrate|both")->capture_default_str();
  cs->add_option("--noise", sw.channel.noise_sigma, "Noise sigma relative to the signal")->capture_default_str();
  cs->add_option("--attenuation", sw.channel.attenuation, "Linear channel gain")->capture_default_str();
  cs->add_option("--cutoff", sw.channel.highpass_cutoff, "High-pass cutoff in Hz, 0 disables")->capture_default_str();
  cs->add_option("--payload-bytes", sw.payload_bytes, "Random payload size")->capture_default_str();
  cs->add_option("--bit-period", sw.bit_period, "Samples per line symbol")->capture_default_str();
  cs->add_option("--sample-rate", sw.sample_rate, "Samples per second")->capture_default_str();
  cs->add_option("--seed", sw.seed, "PRNG seed")->capture_default_str();
  cs->add_option("--waveform", sw_waveform, "Also dump the last sweep point's received waveform as CSV");
  cs->callback([&] {
    action = [&](const EnergyParams&) {
      if (!sw_hum.empty()) sw.hum_amplitudes = sw_hum;
      if (sw_mode == "both") sw.modes = {ReceiverMode::direct_sample, ReceiverMode::integrate_and_dump};
      else sw.modes = {parse_receiver_mode(sw_mode)};
      out << sweep_csv(hum_sweep(sw));
      if (!sw_waveform.empty()) {
        std::vector<std::uint8_t> payload(sw.payload_bytes, 0x5A);
        ChannelModel ch = sw.channel;
        ch.hum_amplitude = sw.hum_amplitudes.empty() ? 0.0 : sw.hum_amplitudes.back();
        auto w = transmit(encode_frame(payload), sw.bit_period, ch, sw.seed, sw.sample_rate);
        if (ch.highpass_cutoff > 0) w = highpass_bias(w, ch.highpass_cutoff);
        std::ofstream f(sw_waveform);
        if (!f) throw ConfigError("cannot write " + sw_waveform);
        write_waveform_csv(f, w);
      }
    };
  });

  // simulate
  std::string sim_path, sim_trace, sim_report;
  auto* sm = app.add_subcommand("simulate", "Run an end-to-end scenario and print the report (JSON)");
  sm->add_option("scenario", sim_path, "Scenario JSON")->required();
  sm->add_option("--trace", sim_trace, "Write the event trace CSV here");
  sm->add_option("-o,--output", sim_report, "Write the report here instead of stdout");
  sm->callback([&] {
    action = [&](const EnergyParams& p) {
      const auto report = run_scenario(load_scenario(sim_path), p);
      const auto text = report_json(report).dump(2) + '\n';
      if (sim_report.empty()) out << text;
      else detail::write_text(sim_report, text);
      if (!sim_trace.empty()) detail::write_text(sim_trace, trace_csv(report));
    };
  });

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    // Help requests exit 0; any other parse failure is a usage error.
    return app.exit(e, out, err) == 0 ? kOk : kUsageError;
  }

  try {
    action(params());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  }
  return kOk;
}

}  // namespace fieldauth::cli
