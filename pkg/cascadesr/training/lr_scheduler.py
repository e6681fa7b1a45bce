"""
torch schedulers with the `lr` property and the per-batch hook the trainer calls.
"""
from torch.optim import lr_scheduler


def scheduler_wrapper(cls):
    """Add step_batch and lr to torch.optim.lr_scheduler.CLS
    """

    class LRWrapper(cls):

        @property
        def lr(self):
            return self.get_last_lr()

        def step_batch(self, batch_num_total=None):
            """Epoch-level schedules do nothing per batch."""
            pass

    LRWrapper.__name__ = 'LRWrapper_{}'.format(cls.__name__)

    return LRWrapper


_StepLR = scheduler_wrapper(lr_scheduler.StepLR)


class StepLR(_StepLR):
    """Multiply the learning rate by gamma every step_size epochs."""
    def __init__(self, optimizer, step_size=100, gamma=0.5, last_epoch=-1):
        super().__init__(optimizer, step_size=int(step_size), gamma=gamma, last_epoch=last_epoch)
