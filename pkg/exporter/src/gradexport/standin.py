"""Tiny stand-in pose-regression model used for tests and wiring checks.

Mimics the shape of a real rotation head: three convolutional stages with a
shared spatial resolution (the tap points), followed by candidate rotation
regressions plus confidences. Not meant to predict anything useful.
"""

import torch
from torch import nn


class StandInPoseNet(nn.Module):
    def __init__(self, channels=8, candidates=4):
        super().__init__()
        self.candidates = candidates
        self.stem = nn.Conv2d(3, channels, 3, stride=4, padding=1)
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv3 = nn.Conv2d(channels, channels, 3, padding=1)
        self.rot_head = nn.Linear(channels, candidates * 3)
        self.conf_head = nn.Linear(channels, candidates)

    def forward(self, x):
        x = torch.relu(self.stem(x))
        x = torch.relu(self.conv1(x))
        x = torch.relu(self.conv2(x))
        x = self.conv3(x)
        pooled = x.mean(dim=(2, 3))
        rotations = self.rot_head(pooled).view(-1, self.candidates, 3)
        confidences = self.conf_head(pooled)
        return rotations, confidences


ARCHITECTURES = {
    "standin": StandInPoseNet,
}


def load_model(arch, checkpoint=None, **kwargs):
    if arch not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {arch!r}; available: {sorted(ARCHITECTURES)}")
    model = ARCHITECTURES[arch](**kwargs)
    if checkpoint is not None:
        model.load_state_dict(torch.load(checkpoint, map_location="cpu", weights_only=True))
    model.eval()
    return model
