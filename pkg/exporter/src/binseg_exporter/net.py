"""Fully convolutional conversion of a pretrained classification backbone.

The two fully connected layers of the AlexNet-style classifier become
convolutions (a 6x6 kernel over the last pooled grid, then 1x1), so the net
emits one 4096-dim descriptor per spatial cell for any input size instead of
a single vector. Geometry of the converted net:

    output stride 32, receptive field 355 px, left/top offset 66 px
    cell j covers input pixels [32*j - 66, 32*j + 288]
"""

from __future__ import annotations

import torch
from torch import nn
from torchvision.models import alexnet

STRIDE = 32
RECEPTIVE_FIELD = 355
OFFSET = 66
FEATURE_DIM = 4096

# (kernel, stride, padding) for every size-changing layer, in order
_GEOMETRY = [
    (11, 4, 2),  # conv1
    (3, 2, 0),   # pool1
    (5, 1, 2),   # conv2
    (3, 2, 0),   # pool2
    (3, 1, 1),   # conv3
    (3, 1, 1),   # conv4
    (3, 1, 1),   # conv5
    (3, 2, 0),   # pool3
    (6, 1, 0),   # fc6 as conv
    (1, 1, 0),   # fc7 as conv
]


class ModelUnavailable(RuntimeError):
    """Requested weights cannot be obtained in this environment."""


def expected_grid(height: int, width: int) -> tuple[int, int]:
    """Feature-map cell grid the converted net emits for an input size."""

    def run(n: int) -> int:
        for k, s, p in _GEOMETRY:
            n = (n + 2 * p - k) // s + 1
            if n < 1:
                raise ValueError(f"input too small for the receptive field")
        return n

    return run(height), run(width)


def min_input_size() -> int:
    """Smallest input edge producing a 1-cell output."""
    lo, hi = 1, 1024
    while lo < hi:
        mid = (lo + hi) // 2
        try:
            expected_grid(mid, mid)
            hi = mid
        except ValueError:
            lo = mid + 1
    return lo


class FullyConvFeatures(nn.Module):
    """Convolutional trunk plus converted fc6/fc7; forward returns the fc7 map."""

    def __init__(self):
        super().__init__()
        base = alexnet(weights=None)
        self.features = base.features
        self.conv6 = nn.Conv2d(256, FEATURE_DIM, kernel_size=6)
        self.conv7 = nn.Conv2d(FEATURE_DIM, FEATURE_DIM, kernel_size=1)
        self.act = nn.ReLU(inplace=True)

    def load_classifier_weights(self, classifier: nn.Sequential) -> None:
        """Reshape fc6/fc7 weights into their convolutional counterparts."""
        fc6, fc7 = classifier[1], classifier[4]
        with torch.no_grad():
            self.conv6.weight.copy_(fc6.weight.view(FEATURE_DIM, 256, 6, 6))
            self.conv6.bias.copy_(fc6.bias)
            self.conv7.weight.copy_(fc7.weight.view(FEATURE_DIM, FEATURE_DIM, 1, 1))
            self.conv7.bias.copy_(fc7.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.features(x)
        x = self.act(self.conv6(x))
        x = self.act(self.conv7(x))
        return x


def build_model(model_id: str, weights_path=None, seed: int = 0) -> FullyConvFeatures:
    """``alexnet`` loads pretrained weights (torchvision cache or a local
    state-dict file); ``alexnet-random`` draws a seeded random init so the
    exporter stays usable offline."""
    if model_id == "alexnet-random":
        torch.manual_seed(seed)
        model = FullyConvFeatures()
        for m in model.modules():
            if isinstance(m, nn.Conv2d):
                nn.init.normal_(m.weight, 0.0, 0.02)
                nn.init.normal_(m.bias, 0.0, 0.01)
        model.eval()
        return model
    if model_id == "alexnet":
        model = FullyConvFeatures()
        if weights_path is not None:
            state = torch.load(weights_path, map_location="cpu", weights_only=True)
            base = alexnet(weights=None)
            base.load_state_dict(state)
        else:
            try:
                from torchvision.models import AlexNet_Weights

                base = alexnet(weights=AlexNet_Weights.IMAGENET1K_V1)
            except Exception as e:
                raise ModelUnavailable(
                    f"pretrained weights not obtainable ({e}); pass --weights or use alexnet-random"
                ) from e
        model.features.load_state_dict(base.features.state_dict())
        model.load_classifier_weights(base.classifier)
        model.eval()
        return model
    raise ModelUnavailable(f"unknown model {model_id!r}; use alexnet or alexnet-random")
