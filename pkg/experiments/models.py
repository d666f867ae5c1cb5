import re

from django.core.exceptions import ValidationError
from django.db import models
from django.utils import timezone

EXPERIMENT_KINDS = [
    ('steady-state', 'Steady state'),
    ('g-sweep', 'Anisotropy sweep with zero-noise extrapolation'),
    ('r-sweep', 'Noise-strength sweep'),
    ('meanfield-phase', 'Mean-field phase diagram'),
    ('spectroscopy', 'Relaxation spectroscopy'),
    ('mitigate-critical-point', 'Critical-point scaling extrapolation'),
]


def validate_config_hash(value):
    """
    Config hashes are lowercase SHA-256 hex digests.
    """
    if not re.match(r'^[0-9a-f]{64}$', value or ''):
        raise ValidationError('Config hash must be a 64-character lowercase hex digest.')
    return value


class ExperimentRun(models.Model):
    """
    One invocation of the simulate command: its configuration, provenance
    and outcome. Per-point outputs live in ResultRecord.
    """

    STATUS_CHOICES = [
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('partial', 'Completed with failed points'),
        ('failed', 'Failed'),
    ]

    kind = models.CharField(
        max_length=32,
        choices=EXPERIMENT_KINDS,
        help_text="Experiment family"
    )
    config_hash = models.CharField(
        max_length=64,
        db_index=True,
        validators=[validate_config_hash],
        help_text="SHA-256 of the canonical configuration"
    )
    config_text = models.TextField(
        blank=True,
        help_text="Configuration file as given"
    )
    config_json = models.JSONField(
        default=dict,
        help_text="Validated configuration with defaults filled in"
    )
    seed = models.IntegerField(default=0)
    tool_version = models.CharField(max_length=20)
    status = models.CharField(
        max_length=20,
        choices=STATUS_CHOICES,
        default='running'
    )
    output_dir = models.CharField(
        max_length=500,
        help_text="Directory holding records.jsonl, the CSV table and run.json"
    )
    error_message = models.TextField(blank=True)

    started_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        verbose_name = 'Experiment run'
        verbose_name_plural = 'Experiment runs'
        ordering = ['-started_at']

    def __str__(self):
        return f"{self.kind} {self.config_hash[:12]} ({self.status})"

    def clean(self):
        super().clean()
        if self.status == 'failed' and not self.error_message:
            raise ValidationError({'error_message': 'A failed run must say why it failed.'})

    def save(self, *args, **kwargs):
        self.full_clean()
        super().save(*args, **kwargs)

    def finish(self, failed_points=0, total_points=0, error_message=''):
        """
        Close the run; it is 'failed' when every point failed.
        """
        if error_message or (total_points and failed_points == total_points):
            self.status = 'failed'
            self.error_message = error_message or f'All {total_points} points failed.'
        elif failed_points:
            self.status = 'partial'
        else:
            self.status = 'completed'
        self.finished_at = timezone.now()
        self.save()

    @property
    def duration(self):
        if self.finished_at is None:
            return None
        return (self.finished_at - self.started_at).total_seconds()


class ResultRecord(models.Model):
    """
    Outputs of one sweep point, tagged with the run that produced it.
    """

    STATUS_CHOICES = [
        ('ok', 'OK'),
        ('failed', 'Failed'),
    ]

    run = models.ForeignKey(
        ExperimentRun,
        on_delete=models.CASCADE,
        related_name='records'
    )
    index = models.PositiveIntegerField(help_text="Point index within the run")
    g = models.FloatField(null=True, blank=True)
    r = models.FloatField(null=True, blank=True)
    magnetization = models.FloatField(null=True, blank=True, help_text="M = <sigma^z> per site")
    order_parameter = models.FloatField(null=True, blank=True, help_text="m = <sigma^x> per site")
    gap = models.FloatField(null=True, blank=True, help_text="Relaxation gap")
    eigenvalues = models.JSONField(default=list, blank=True, help_text="[re, im] pairs")
    diagnostics = models.JSONField(default=dict, blank=True)
    status = models.CharField(max_length=10, choices=STATUS_CHOICES, default='ok')
    error_message = models.TextField(blank=True)

    class Meta:
        verbose_name = 'Result record'
        verbose_name_plural = 'Result records'
        ordering = ['run', 'index']
        unique_together = ['run', 'index']

    def __str__(self):
        return f"{self.run.kind} point {self.index} ({self.status})"

    def clean(self):
        super().clean()
        if self.status == 'failed' and not self.error_message:
            raise ValidationError({'error_message': 'A failed point must carry its error.'})

    def save(self, *args, **kwargs):
        self.full_clean()
        super().save(*args, **kwargs)

    @property
    def config_hash(self):
        return self.run.config_hash
