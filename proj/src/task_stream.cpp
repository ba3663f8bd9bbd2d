#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "tsacl/dataset.hpp"
#include "tsacl/error.hpp"

namespace tsacl::data {

TaskStream build_task_stream(const DatasetPair& pair, std::size_t classes_per_task,
                             std::uint64_t shuffle_seed) {
  require(pair.test.num_classes() == pair.train.num_classes(), ErrorCode::kDimensionMismatch,
          "train/test num_classes differ");
  return build_task_stream(pair.train.labels(), pair.test.labels(), pair.train.num_classes(),
                           classes_per_task, shuffle_seed);
}

TaskStream build_task_stream(std::span<const std::uint32_t> labels_train,
                             std::span<const std::uint32_t> labels_test, std::size_t num_classes,
                             std::size_t classes_per_task, std::uint64_t shuffle_seed) {
  require(num_classes > 0, ErrorCode::kInvalidArgument, "num_classes must be positive");
  require(classes_per_task > 0, ErrorCode::kInvalidArgument, "classes_per_task must be positive");
  require(num_classes % classes_per_task == 0, ErrorCode::kInvalidArgument,
          "num_classes " + std::to_string(num_classes) + " is not divisible by classes_per_task " +
              std::to_string(classes_per_task));

  TaskStream stream;
  stream.class_order.resize(num_classes);
  std::iota(stream.class_order.begin(), stream.class_order.end(), std::uint32_t{0});
  std::mt19937_64 rng(shuffle_seed);
  std::shuffle(stream.class_order.begin(), stream.class_order.end(), rng);

  // class id -> task index
  std::vector<std::size_t> owner(num_classes);
  const std::size_t num_tasks = num_classes / classes_per_task;
  stream.tasks.resize(num_tasks);
  for (std::size_t t = 0; t < num_tasks; ++t) {
    auto& task = stream.tasks[t];
    task.task_index = t;
    task.classes.assign(stream.class_order.begin() + t * classes_per_task,
                        stream.class_order.begin() + (t + 1) * classes_per_task);
    for (auto c : task.classes) owner[c] = t;
  }
  for (std::size_t i = 0; i < labels_train.size(); ++i) {
    require(labels_train[i] < num_classes, ErrorCode::kLabelOutOfRange,
            "train label " + std::to_string(labels_train[i]) + " out of range");
    stream.tasks[owner[labels_train[i]]].train_indices.push_back(i);
  }
  for (std::size_t i = 0; i < labels_test.size(); ++i) {
    require(labels_test[i] < num_classes, ErrorCode::kLabelOutOfRange,
            "test label " + std::to_string(labels_test[i]) + " out of range");
    stream.tasks[owner[labels_test[i]]].test_indices.push_back(i);
  }
  return stream;
}

}  // namespace tsacl::data
