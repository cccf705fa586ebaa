#pragma once

#include <array>
#include <string_view>

namespace rad::testing {

// Partial-match similarity in halves, rows = ground truth, columns =
// prediction, both in taxonomy order:
// SU SUR SD SDR TL TR DAC TA CLL CLR REV SSL SSR STOP GSC GSS
inline constexpr std::array<std::string_view, 16> kSimilarityHalves = {
    "2100000000000000",  // speed_up
    "1200000000000000",  // speed_up_rapidly
    "0021000000000001",  // slow_down
    "0012000000000001",  // slow_down_rapidly
    "0000200010010000",  // turn_left
    "0000020001001000",  // turn_right
    "0000002000000000",  // drive_along_curve
    "0000000200000000",  // turn_around
    "0000100020010000",  // change_lane_left
    "0000010002001000",  // change_lane_right
    "0000000000200000",  // reverse
    "0000100010020000",  // shift_slightly_left
    "0000010001002000",  // shift_slightly_right
    "0000000000000200",  // stop
    "0000000000000020",  // go_straight_constantly
    "0011000000000002",  // go_straight_slowly
};

struct TableRow {
  std::string_view table;
  std::string_view name;
  double ema, macro_f1, weighted_f1, pms, overall;
};

// Benchmark rows: four sub-metrics and the reported composite score.
inline constexpr std::array<TableRow, 25> kPublishedRows = {{
    {"1", "Lynx (Fine-tuning)", 0.1524, 0.0167, 0.0653, 0.2768, 0.1327},
    {"1", "CogVLM (Fine-tuning)", 0.2178, 0.0204, 0.1105, 0.3563, 0.1846},
    {"1", "DriveLM (on LLaMA-LoRA-BIAS-7B)", 0.1455, 0.0448, 0.1203, 0.3028, 0.1518},
    {"1", "DriveLM (on LLaMA-BIAS-7B)", 0.1896, 0.0409, 0.1212, 0.3425, 0.1693},
    {"1", "DriveLM (on LLaMA-CAPTION-7B)", 0.2034, 0.0380, 0.1080, 0.3952, 0.1896},
    {"1", "GPT-4o (Official API)", 0.2994, 0.1127, 0.2288, 0.4377, 0.2756},
    {"1", "DriveVLM", 0.3743, 0.1671, 0.3325, 0.5462, 0.3589},
    {"1", "DriveVLM-Dual (cooperating with VAD)", 0.4016, 0.1854, 0.3506, 0.5613, 0.3801},
    {"1", "RAD (Ours, on Qwen-VL-2.5-7B)", 0.4096, 0.1907, 0.3813, 0.5870, 0.3956},
    {"2", "Qwen-VL-2-2B Vanilla", 0.2188, 0.0358, 0.1013, 0.4353, 0.2020},
    {"2", "Qwen-VL-2-2B Vanilla + RAG", 0.2145, 0.1049, 0.2278, 0.4319, 0.2387},
    {"2", "Qwen-VL-2-2B Fine-tuning", 0.1543, 0.0528, 0.1194, 0.3017, 0.1565},
    {"2", "Qwen-VL-2-2B Fine-tuning + RAG", 0.2610, 0.1302, 0.2556, 0.4538, 0.2723},
    {"2", "Qwen-VL-2-7B Vanilla", 0.2866, 0.0654, 0.1721, 0.4941, 0.2609},
    {"2", "Qwen-VL-2-7B Vanilla + RAG", 0.3404, 0.1460, 0.3235, 0.5424, 0.3385},
    {"2", "Qwen-VL-2-7B Fine-tuning", 0.2908, 0.0717, 0.1986, 0.4562, 0.2616},
    {"2", "Qwen-VL-2-7B Fine-tuning + RAG", 0.3446, 0.1460, 0.3011, 0.5213, 0.3315},
    {"2", "Qwen-VL-2.5-3B Vanilla", 0.1318, 0.0366, 0.0955, 0.3886, 0.1568},
    {"2", "Qwen-VL-2.5-3B Vanilla + RAG", 0.1240, 0.0298, 0.0814, 0.3866, 0.1491},
    {"2", "Qwen-VL-2.5-3B Fine-tuning", 0.2164, 0.0531, 0.1398, 0.3949, 0.2041},
    {"2", "Qwen-VL-2.5-3B Fine-tuning + RAG", 0.2539, 0.1075, 0.2090, 0.4520, 0.2552},
    {"2", "Qwen-VL-2.5-7B Vanilla", 0.2849, 0.0644, 0.1715, 0.4893, 0.2590},
    {"2", "Qwen-VL-2.5-7B Vanilla + RAG", 0.3581, 0.1981, 0.3386, 0.5544, 0.3615},
    {"2", "Qwen-VL-2.5-7B Fine-tuning", 0.3482, 0.1085, 0.2885, 0.5360, 0.3259},
    {"2", "Qwen-VL-2.5-7B Fine-tuning + RAG", 0.4096, 0.1907, 0.3813, 0.5870, 0.3956},
}};

}  // namespace rad::testing
