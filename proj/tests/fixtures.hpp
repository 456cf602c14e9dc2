#pragma once

#include <string>
#include <vector>

#include "qoe/data_model.hpp"

namespace fixture {

inline qoe::StreamingSession session(std::int64_t id) {
  qoe::StreamingSession s;
  s.session_id = id;
  s.content_type = "movie";
  s.device = "tv";
  s.encoding_profile = "hevc_main";
  s.duration_s = 120.0;
  s.bitrate_mean_kbps = 4000.0;
  s.bitrate_std_kbps = 400.0;
  s.vmaf_mean = 80.0;
  s.vmaf_std = 8.0;
  s.ssim_mean = 0.9;
  s.qp_mean = 28.0;
  s.stall_duration_s = 0.0;
  s.stall_count = 0;
  s.mos = 70.0;
  return s;
}

inline qoe::Dataset plain(std::vector<qoe::StreamingSession> sessions) {
  std::vector<qoe::Record> rows;
  for (auto& s : sessions) rows.push_back({std::move(s), std::nullopt, std::nullopt, {}});
  return qoe::Dataset(qoe::Dataset::standard_schema(false), std::move(rows),
                      qoe::Provenance{qoe::DataSource::ingested, std::nullopt, std::nullopt});
}

inline std::string header() {
  return "session_id,content_type,device,encoding_profile,duration_s,bitrate_mean_kbps,"
         "bitrate_std_kbps,vmaf_mean,vmaf_std,ssim_mean,qp_mean,stall_duration_s,stall_count,mos";
}

}  // namespace fixture
