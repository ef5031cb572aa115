"""Published reference numbers shipped as documentation fixtures.

These values come from a large-scale study run on a 4,795-image corpus
of human-labeled inpainting results and on production inpainting models.
They are NOT reproducible from this package alone (the labeled corpus
and those models are not bundled); they are kept here as context for
interpreting desk-scale results, and as inputs to internal-consistency
checks such as the F-score formula validation.
"""

# Labeled-corpus statistics: total images, images judged perfect fills,
# and the mean artifact-area / hole-area ratio over labeled images.
REFERENCE_LABELED_DATASET = {
    "n_total": 4795,
    "n_perfect": 832,
    "mean_label_hole_ratio": 0.2967,
}

# Segmentation benchmark rows (percent scale). The first three vary the
# network; the middle rows ablate training data and inputs against the
# resnet50_pspnet base; the last three are individual human annotators
# scored against the consensus labels.
REFERENCE_SEG_BENCHMARK = [
    {"name": "resnet50_hrnet", "iou": 41.35, "precision": 58.45, "recall": 58.56, "fscore": 58.51},
    {"name": "swinb_uper", "iou": 44.20, "precision": 63.01, "recall": 59.69, "fscore": 61.30},
    {"name": "resnet50_pspnet", "iou": 46.04, "precision": 59.78, "recall": 66.71, "fscore": 63.05},
    {"name": "no_perfect_fills", "iou": 43.83, "precision": 64.92, "recall": 57.43, "fscore": 60.94},
    {"name": "no_pretrained_weights", "iou": 44.93, "precision": 66.22, "recall": 58.29, "fscore": 62.00},
    {"name": "with_hole_channel", "iou": 45.96, "precision": 66.07, "recall": 60.16, "fscore": 62.98},
    {"name": "pseudo_pretraining", "iou": 46.44, "precision": 62.01, "recall": 64.91, "fscore": 63.43},
    {"name": "pseudo_pretraining_real_images", "iou": 46.77, "precision": 59.59, "recall": 68.49, "fscore": 63.73},
    {"name": "human_subject_a", "iou": 45.60, "precision": 75.07, "recall": 53.73, "fscore": 62.64},
    {"name": "human_subject_b", "iou": 42.21, "precision": 60.40, "recall": 58.36, "fscore": 59.36},
    {"name": "human_subject_c", "iou": 36.85, "precision": 61.47, "recall": 47.93, "fscore": 53.86},
]

# Agreement (percent of strong-preference pairs ranked the human way)
# between metrics and five-voter human judgments, per model pairing.
REFERENCE_METRIC_AGREEMENT = {
    "lama_vs_profill": {"n_pairs": 321, "psnr": 56.70, "lpips": 62.31,
                        "hyperiqa": 39.97, "musiq": 65.11, "par": 65.42},
    "lama_vs_comodgan": {"n_pairs": 367, "psnr": 48.77, "lpips": 48.77,
                         "hyperiqa": 51.50, "musiq": 55.31, "par": 69.21},
    "profill_vs_edgeconnect": {"n_pairs": 560, "psnr": 23.92, "lpips": 11.96,
                               "hyperiqa": 56.39, "musiq": 49.62, "par": 79.82},
    "lama_vs_edgeconnect": {"n_pairs": 718, "psnr": 44.71, "lpips": 43.45,
                            "hyperiqa": 35.71, "musiq": 71.72, "par": 72.70},
    "overall": {"n_pairs": 1966, "psnr": 41.50, "lpips": 38.55,
                "hyperiqa": 45.24, "musiq": 61.28, "par": 72.89},
}

# Long-horizon refill: mean PAR by fill iteration for a strong production
# inpainter run to 20 iterations. The ratio keeps shrinking, at a
# decaying rate.
REFERENCE_PAR_BY_ITERATION = {
    1: 0.3786, 2: 0.2439, 3: 0.1811, 4: 0.1464, 5: 0.1241,
    6: 0.1091, 7: 0.0975, 8: 0.0885, 9: 0.0814, 10: 0.0756,
    11: 0.0707, 12: 0.0666, 13: 0.0628, 14: 0.0600, 15: 0.0575,
    16: 0.0552, 17: 0.0533, 18: 0.0514, 19: 0.0497, 20: 0.0481,
}
