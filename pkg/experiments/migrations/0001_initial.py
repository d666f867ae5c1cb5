# Generated by Django 4.2.7 on 2026-10-18 09:12

from django.db import migrations, models
import django.db.models.deletion
import experiments.models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('steady-state', 'Steady state'), ('g-sweep', 'Anisotropy sweep with zero-noise extrapolation'), ('r-sweep', 'Noise-strength sweep'), ('meanfield-phase', 'Mean-field phase diagram'), ('spectroscopy', 'Relaxation spectroscopy'), ('mitigate-critical-point', 'Critical-point scaling extrapolation')], help_text='Experiment family', max_length=32)),
                ('config_hash', models.CharField(db_index=True, help_text='SHA-256 of the canonical configuration', max_length=64, validators=[experiments.models.validate_config_hash])),
                ('config_text', models.TextField(blank=True, help_text='Configuration file as given')),
                ('config_json', models.JSONField(default=dict, help_text='Validated configuration with defaults filled in')),
                ('seed', models.IntegerField(default=0)),
                ('tool_version', models.CharField(max_length=20)),
                ('status', models.CharField(choices=[('running', 'Running'), ('completed', 'Completed'), ('partial', 'Completed with failed points'), ('failed', 'Failed')], default='running', max_length=20)),
                ('output_dir', models.CharField(help_text='Directory holding records.jsonl, the CSV table and run.json', max_length=500)),
                ('error_message', models.TextField(blank=True)),
                ('started_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'verbose_name': 'Experiment run',
                'verbose_name_plural': 'Experiment runs',
                'ordering': ['-started_at'],
            },
        ),
        migrations.CreateModel(
            name='ResultRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('index', models.PositiveIntegerField(help_text='Point index within the run')),
                ('g', models.FloatField(blank=True, null=True)),
                ('r', models.FloatField(blank=True, null=True)),
                ('magnetization', models.FloatField(blank=True, help_text='M = <sigma^z> per site', null=True)),
                ('order_parameter', models.FloatField(blank=True, help_text='m = <sigma^x> per site', null=True)),
                ('gap', models.FloatField(blank=True, help_text='Relaxation gap', null=True)),
                ('eigenvalues', models.JSONField(blank=True, default=list, help_text='[re, im] pairs')),
                ('diagnostics', models.JSONField(blank=True, default=dict)),
                ('status', models.CharField(choices=[('ok', 'OK'), ('failed', 'Failed')], default='ok', max_length=10)),
                ('error_message', models.TextField(blank=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='records', to='experiments.experimentrun')),
            ],
            options={
                'verbose_name': 'Result record',
                'verbose_name_plural': 'Result records',
                'ordering': ['run', 'index'],
                'unique_together': {('run', 'index')},
            },
        ),
    ]
