import os
import logging
import torch

from cascadesr.model.weights import save_weights, load_weights
from cascadesr.training import register_callback

logger = logging.getLogger()

HOOKS = (
    'on_train_begin', 'on_train_end',
    'on_train_epoch_begin', 'on_train_epoch_end',
    'on_train_batch_begin', 'on_train_batch_end',
)


def as_number(value):
    """int/float or a 0-dim tensor as a python number, anything else as None."""
    if isinstance(value, torch.Tensor):
        return value.item() if value.dim() == 0 else None
    if isinstance(value, (int, float)):
        return value
    return None


def format_scalar(value, ndigits=6):
    return f'{float(value):.{ndigits}f}'.rstrip('0').rstrip('.')


def format_status(status):
    """`key:value` for the numeric and string entries, sorted by key."""
    parts = []
    for k, v in sorted(status.items()):
        n = as_number(v)
        if n is not None:
            parts.append(f'{k}:{format_scalar(n)}')
        elif isinstance(v, str):
            parts.append(f'{k}:{v}')
    return ', '.join(parts)


class Callback(object):
    """
    Hooks called by the trainer. Counting callbacks track epochs and batches; the status
    of every callback is saved with the checkpoints and restored on resume.
    """

    def __init__(self, counting=False):
        self.model = None
        self.counting = counting
        self.epoch_counter = 0
        self.batch_counter = 0

    def set_model(self, model):
        self.model = model
        return self

    def get_train_status(self):
        if not self.counting:
            return {}
        return {'epoch_counter': self.epoch_counter, 'batch_counter': self.batch_counter}

    def set_train_status(self, status):
        if self.counting:
            self.epoch_counter = status.get('epoch_counter', 0)
            self.batch_counter = status.get('batch_counter', 0)
        return self

    def reset_train_status(self):
        pass

    def format_train_status(self):
        status = {k: v for k, v in self.get_train_status().items() if not k.endswith('_counter')}
        return format_status(status)

    def on_train_begin(self, logs=None):
        pass

    def on_train_end(self, logs=None):
        pass

    def on_train_epoch_begin(self, epoch, logs=None):
        pass

    def on_train_epoch_end(self, epoch, logs=None):
        if self.counting:
            self.epoch_counter += 1

    def on_train_batch_begin(self, batch, logs=None):
        pass

    def on_train_batch_end(self, batch, logs=None):
        if self.counting:
            self.batch_counter += 1


class CallbackList(object):
    """Forwards every hook to the callbacks in order."""

    def __init__(self, callbacks=None):
        self.callbacks = list(callbacks or [])

    def __iter__(self):
        return iter(self.callbacks)

    def __getattr__(self, hook):
        if hook not in HOOKS:
            raise AttributeError(hook)

        def call(*args):
            for c in self.callbacks:
                getattr(c, hook)(*args)
        return call


class BaseCallback(Callback):
    """
    Callbacks selected by name with --callbacks, built from args and the trainer.
    """
    def __init__(self, args=None, trainer=None):
        super().__init__(counting=True)
        self.args = args
        self.trainer = trainer
        self.optimizer = trainer.optimizer
        self.lr_scheduler = trainer.lr_scheduler

    @staticmethod
    def add_args(parser, arglist=None):
        pass

    @classmethod
    def build(cls, args, trainer):
        return cls(args, trainer)


class LogCallback(Callback):
    """Logs the batch-size weighted means of the numeric outputs since the last line,
    followed by the status of the other callbacks."""
    def __init__(self, callbacks, log_every_n_batches=500, log_every_n_epochs=1):
        super().__init__(counting=True)
        self.callbacks = list(callbacks)
        self.log_every_n_batches = log_every_n_batches
        self.log_every_n_epochs = log_every_n_epochs
        self.sums = {}
        self.samples = 0

    def on_train_batch_end(self, batch, logs=None):
        super().on_train_batch_end(batch, logs)
        n = len(next(iter(batch.values())))
        for k, v in (logs or {}).items():
            v = as_number(v)
            if v is not None:
                self.sums[k] = self.sums.get(k, 0.0) + n * v
        self.samples += n
        if self.log_every_n_batches and self.batch_counter % self.log_every_n_batches == 0:
            self.flush()

    def on_train_epoch_end(self, epoch, logs=None):
        super().on_train_epoch_end(epoch, logs)
        if self.log_every_n_epochs and self.epoch_counter % self.log_every_n_epochs == 0:
            self.flush()

    def on_train_end(self, logs=None):
        logger.info('Training end.')

    def flush(self):
        logger.info(self.format_train_status())
        self.reset_train_status()

    def format_train_status(self):
        means = {k: v / self.samples for k, v in self.sums.items()} if self.samples else {}
        parts = [f'Epoch {self.epoch_counter}, batch {self.batch_counter}', format_status(means)]
        parts += [c.format_train_status() for c in self.callbacks]
        return ' - '.join(p for p in parts if p)

    def reset_train_status(self):
        self.sums, self.samples = {}, 0
        for c in self.callbacks:
            c.reset_train_status()

    def get_train_status(self):
        status = super().get_train_status()
        status.update(sums=dict(self.sums), samples=self.samples)
        return status

    def set_train_status(self, status):
        super().set_train_status(status)
        self.sums = dict(status.get('sums', {}))
        self.samples = status.get('samples', 0)
        return self


class Checkpoint(Callback):
    """After every epoch saves `checkpoint-<epoch>.erbpn` (flat weight format) and
    `checkpoint-<epoch>-stat.pt` (callbacks, optimizer and lr scheduler status, torch.save).
    Only the last `last_to_keep` epochs stay on disk.
    """
    WEIGHTS_SUFFIX = '.erbpn'
    STATUS_SUFFIX = '-stat.pt'

    def __init__(self, base_dir, callbacks, optimizer=None, lr_scheduler=None, last_to_keep=1):
        super().__init__(counting=True)
        self.base_dir = base_dir
        self.callbacks = list(callbacks)
        self.optimizer = optimizer
        self.lr_scheduler = lr_scheduler
        self.last_to_keep = last_to_keep
        self.ckpts_dir = os.path.join(base_dir, 'checkpoints')
        os.makedirs(self.ckpts_dir, exist_ok=True)
        self.saved = []

    def files(self, prefix):
        return prefix + self.WEIGHTS_SUFFIX, prefix + self.STATUS_SUFFIX

    def get_train_status(self):
        status = super().get_train_status()
        status.update(
            checkpoints=list(self.saved),
            callbacks=[c.get_train_status() for c in self.callbacks],
            optimizer=self.optimizer.state_dict() if self.optimizer is not None else None,
            lr_scheduler=self.lr_scheduler.state_dict() if self.lr_scheduler is not None else None,
        )
        return status

    def set_train_status(self, status):
        super().set_train_status(status)
        self.saved = list(status['checkpoints'])
        if self.optimizer is not None and status.get('optimizer') is not None:
            self.optimizer.load_state_dict(status['optimizer'])
        if self.lr_scheduler is not None and status.get('lr_scheduler') is not None:
            self.lr_scheduler.load_state_dict(status['lr_scheduler'])
        if len(status['callbacks']) != len(self.callbacks):
            logger.warning(f'checkpoint holds {len(status["callbacks"])} callback states, '
                           f'{len(self.callbacks)} callbacks are active')
        for c, s in zip(self.callbacks, status['callbacks']):
            c.set_train_status(s)
        return self

    def on_train_epoch_end(self, epoch, logs=None):
        super().on_train_epoch_end(epoch, logs)
        self.save_checkpoint()

    def save_checkpoint(self):
        if self.last_to_keep <= 0:
            return
        while len(self.saved) >= self.last_to_keep:
            for file in self.files(self.saved.pop(0)):
                if os.path.exists(file):
                    os.remove(file)
        prefix = os.path.join(self.ckpts_dir, f'checkpoint-{self.epoch_counter - 1}')
        self.saved.append(prefix)
        weights, status = self.files(prefix)
        logger.debug(f'saving checkpoint {prefix}')
        save_weights(self.model, weights)
        torch.save(self.get_train_status(), status)

    def load_checkpoint(self, prefix):
        weights, status = self.files(prefix)
        logger.info(f'Load checkpoint from {weights}')
        self.model.load_state_dict(load_weights(weights).state_dict())
        self.set_train_status(torch.load(status, weights_only=False))

    @staticmethod
    def parse_prefix_epoch_num(prefix):
        name = os.path.basename(prefix)
        if not name.startswith('checkpoint-'):
            return None
        num = name[len('checkpoint-'):]
        return int(num) if num.isnumeric() else None

    def find_last_checkpoint_prefix(self, save_dir):
        ckpts_dir = os.path.join(save_dir, 'checkpoints')
        if not os.path.isdir(ckpts_dir):
            return None
        found = {}
        for file in os.listdir(ckpts_dir):
            if file.endswith(self.STATUS_SUFFIX):
                prefix = file[:-len(self.STATUS_SUFFIX)]
                epoch = self.parse_prefix_epoch_num(prefix)
                if epoch is not None:
                    found[epoch] = os.path.join(ckpts_dir, prefix)
        return found[max(found)] if found else None

    def restore(self, save_dir=None):
        """Load the last checkpoint; returns its epoch or None."""
        prefix = self.find_last_checkpoint_prefix(save_dir or self.base_dir)
        if not prefix or not os.path.exists(self.files(prefix)[0]):
            logger.info('No checkpoint found')
            return None
        self.load_checkpoint(prefix)
        return self.parse_prefix_epoch_num(prefix)


class LRStatCallback(Callback):
    """Reports the current learning rates."""
    def __init__(self, optimizer=None, lr_scheduler=None):
        super().__init__()
        self.optimizer = optimizer
        self.lr_scheduler = lr_scheduler

    def get_train_status(self):
        if self.lr_scheduler is not None:
            rates = self.lr_scheduler.lr
        elif self.optimizer is not None:
            rates = [g['lr'] for g in self.optimizer.param_groups]
        else:
            return {}
        return {'lr': ', '.join(format_scalar(lr, ndigits=10) for lr in rates)}


@register_callback('loss_curve')
class LossCurveCallback(BaseCallback):
    """Appends `epoch,batch,loss,lr` per training batch to <exp_dir>/loss_curve.csv."""
    HEADER = 'epoch,batch,loss,lr\n'

    def __init__(self, args, trainer):
        super().__init__(args, trainer)
        self.path = os.path.join(args.exp_dir, 'loss_curve.csv')
        self.epoch = 0

    def on_train_begin(self, logs=None):
        with open(self.path, 'w') as wt:
            wt.write(self.HEADER)

    def on_train_epoch_begin(self, epoch, logs=None):
        self.epoch = epoch

    def on_train_batch_end(self, batch, logs=None):
        super().on_train_batch_end(batch, logs)
        logs = logs or {}
        if 'loss' not in logs:
            return
        loss = float(logs['loss'])
        lr = self.optimizer.param_groups[0]['lr']
        with open(self.path, 'a') as wt:
            wt.write(f'{self.epoch},{self.batch_counter - 1},{loss!r},{lr!r}\n')


class AugmentEpochSetter(Callback):
    """Sets the epoch of a dataset whose augmentation is seeded by epoch."""
    def __init__(self, dataset):
        super().__init__()
        self.dataset = dataset

    def on_train_epoch_begin(self, epoch, logs=None):
        self.dataset.set_epoch(epoch)
