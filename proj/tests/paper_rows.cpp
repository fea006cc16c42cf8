#include "paper_rows.hpp"

namespace paper_rows {

std::vector<AveragedGroup> averaged_groups() {
    return {
        {"fine-grained/CaSED", 0, {26, 36, 46}},
        {"fine-grained/InternVL2.5-4B", 1, {27, 37, 47}},
        {"fine-grained/InternVL2.5-8B", 2, {28, 38, 48}},
        {"fine-grained/Qwen2.5VL-3B", 3, {29, 39, 49}},
        {"fine-grained/Qwen2.5VL-7B", 4, {30, 40, 50}},
        {"fine-grained/BeSpecific", 5, {31, 41, 51}},
        {"fine-grained/sft", 6, {32, 42, 52}},
        {"fine-grained/rft", 7, {33, 43, 53}},
        {"fine-grained/dyn", 8, {34, 44, 54}},
        {"fine-grained/BoN-64", 9, {35, 45, 55}},
        {"very-fine-grained/CaSED", 10, {56, 66}},
        {"very-fine-grained/InternVL2.5-4B", 11, {57, 67}},
        {"very-fine-grained/InternVL2.5-8B", 12, {58, 68}},
        {"very-fine-grained/Qwen2.5VL-3B", 13, {59, 69}},
        {"very-fine-grained/Qwen2.5VL-7B", 14, {60, 70}},
        {"very-fine-grained/BeSpecific", 15, {61, 71}},
        {"very-fine-grained/sft", 16, {62, 72}},
        {"very-fine-grained/rft", 17, {63, 73}},
        {"very-fine-grained/dyn", 18, {64, 74}},
        {"very-fine-grained/BoN-64", 19, {65, 75}},
    };
}

}  // namespace paper_rows
